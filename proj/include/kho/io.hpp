#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kho/grid.hpp"
#include "kho/observables.hpp"
#include "kho/oracles.hpp"

namespace kho {

using ParamList = std::vector<std::pair<std::string, std::string>>;

/// A grid plus the parameter lines stored alongside it in the snapshot file.
struct GridSnapshot {
    PhaseSpaceGrid grid;
    ParamList params;
};

/// Writes the documented snapshot format: a text header ("KHOGRID v1", label,
/// sizes, window bounds printed with %.17g, one "param key value" line per
/// entry, then "data") followed by the values as row-major little-endian
/// 64-bit reals. Round trips bit-for-bit.
void write_grid_snapshot(const std::string& path, const PhaseSpaceGrid& grid,
                         const ParamList& params = {});
GridSnapshot read_grid_snapshot(const std::string& path);

/// Ensemble snapshot ("KHOENS v1"): header with m, seed, step_count and
/// params, then the q coordinates followed by the p coordinates, both as
/// little-endian 64-bit reals.
void write_ensemble_snapshot(const std::string& path, const TrajectoryEnsemble& ens,
                             const ParamList& params = {});
TrajectoryEnsemble read_ensemble_snapshot(const std::string& path);

/// Distance series as CSV: a '#' comment block carrying every parameter and
/// chi, a header line "n,distance,norm_q,norm_cl,negativity", then one row
/// per record with reals printed as %.17g.
void write_distance_csv(const std::string& path, const DistanceSeries& series,
                        const ParamList& extra = {});

enum class Palette {
    diverging,  // zero at white, negative blue, positive red, range +-max|W|
    sequential, // 0 at black through red and yellow to white at max
};

Palette palette_from_string(const std::string& s); // "signed" / "unsigned"

/// Binary portable pixmap (P6) heatmap; image rows run from p_max at the top
/// to p_min at the bottom, columns from q_min to q_max.
void write_heatmap_ppm(const std::string& path, const PhaseSpaceGrid& grid, Palette palette);

/// FNV-1a 64-bit checksum.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t file_fnv1a64(const std::string& path);

struct ManifestEntry {
    std::string path; // relative to the manifest's directory
    std::string kind; // "series" | "grid" | "ensemble" | "heatmap"
    std::string scenario;
    ParamList params;
    std::uint64_t bytes = 0;
    std::uint64_t checksum = 0; // fnv1a64 of the file contents
};

struct Manifest {
    std::string scenario;
    std::vector<ManifestEntry> entries;
};

/// JSON manifest listing every artifact a run wrote, with checksums.
void write_manifest(const std::string& path, const Manifest& manifest);
Manifest read_manifest(const std::string& path);

/// Recomputes each entry's checksum relative to the manifest's directory;
/// returns the paths that are missing or mismatched.
std::vector<std::string> verify_manifest(const std::string& path);

} // namespace kho
