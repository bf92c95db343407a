#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nestmix/config.hpp"
#include "nestmix/data.hpp"
#include "nestmix/mcmc.hpp"
#include "nestmix/summaries.hpp"
#include "nestmix/vi.hpp"

namespace nestmix {

// On-disk fit container: 8-byte magic, uint32 version, uint64 JSON header
// length, JSON header, then a little-endian binary payload of named blobs.
// Volatile provenance (timestamps, elapsed time) lives only in the header,
// so the payload is byte-identical across reruns with the same seed.
inline constexpr char kArchiveMagic[8] = {'N', 'M', 'I', 'X', 'F', 'I', 'T', '\n'};
inline constexpr std::uint32_t kArchiveVersion = 1;

struct FitArchive {
    FitMethod method = FitMethod::MCMC;
    ModelConfig cfg;
    GroupedData data;
    McmcParams mcmc_params;
    ViParams vi_params;
    std::optional<McmcChains> chains;
    std::optional<ViFit> vifit;
    std::string created_at;  // ISO 8601, set on save
};

void save_archive(const std::string& path, const FitArchive& a);
FitArchive load_archive(const std::string& path);

// Payload section only (everything after the JSON header); used to verify
// rerun determinism.
std::vector<unsigned char> archive_payload_bytes(const std::string& path);

}  // namespace nestmix
