#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cgqg/closure.hpp"
#include "cgqg/qg.hpp"

namespace cgqg::io {

// Binary snapshot format: magic "CGQG", version, nx, ny, layer count, dt,
// time, params hash, then little-endian float64 layer-major values.
// Round trips are bitwise exact.
void write_snapshot(const std::filesystem::path& path, const LayeredField& f,
                    double dt, uint64_t params_hash);

struct Snapshot {
    LayeredField field;
    double dt = 0.0;
    uint64_t params_hash = 0;
};

Snapshot read_snapshot(const std::filesystem::path& path);

// Closure parameter blob: magic "CGCL", version, family id, shape metadata,
// raw little-endian float64 theta.
void write_closure(const std::filesystem::path& path, const closure::ClosureParams& p);
closure::ClosureParams read_closure(const std::filesystem::path& path);

// Dataset directory = numbered snapshots + manifest.json.
struct DatasetManifest {
    uint64_t config_hash = 0;
    uint64_t dataset_seed = 0;
    uint64_t params_hash = 0;
    uint64_t data_hash = 0;  // rolling hash over all snapshot payloads in order
    int count = 0;
    int nx = 0, ny = 0;
    double coarse_dt = 0.0;
    std::string code_version;
};

void write_dataset(const std::filesystem::path& dir, const std::vector<LayeredField>& series,
                   DatasetManifest manifest);
DatasetManifest read_manifest(const std::filesystem::path& dir);
std::vector<LayeredField> read_dataset(const std::filesystem::path& dir);

// CSV writers; every file carries a "# config=... version=..." comment line.
struct CsvColumn {
    std::string name;
    std::vector<double> values;
};

void write_csv(const std::filesystem::path& path, const std::vector<CsvColumn>& cols,
               uint64_t config_hash);
std::vector<CsvColumn> read_csv(const std::filesystem::path& path);

// Plain "key = value" report file, deterministic ordering.
void write_report(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& entries,
                  uint64_t config_hash);

uint64_t hash_file(const std::filesystem::path& path);

}  // namespace cgqg::io
