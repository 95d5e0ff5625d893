#include "cgqg/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cgqg/common.hpp"

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

namespace cgqg::io {

namespace {

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t get_u32(std::istream& is) {
    uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint64_t get_u64(std::istream& is) {
    uint64_t v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
double get_f64(std::istream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
    return is;
}

std::string snapshot_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snap_%06d.cgqg", i);
    return buf;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const LayeredField& f,
                    double dt, uint64_t params_hash) {
    auto os = open_out(path);
    os.write("CGQG", 4);
    put_u32(os, 1u);
    put_u32(os, uint32_t(f.nx));
    put_u32(os, uint32_t(f.ny));
    put_u32(os, uint32_t(f.nl));
    put_f64(os, dt);
    put_f64(os, f.time);
    put_u64(os, params_hash);
    os.write(reinterpret_cast<const char*>(f.v.data()), std::streamsize(f.v.size() * 8));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    auto is = open_in(path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "CGQG", 4) != 0)
        throw std::runtime_error("bad snapshot magic in " + path.string());
    const uint32_t version = get_u32(is);
    if (version != 1) throw std::runtime_error("unsupported snapshot version");
    Snapshot s;
    const int nx = int(get_u32(is));
    const int ny = int(get_u32(is));
    const int nl = int(get_u32(is));
    s.dt = get_f64(is);
    const double time = get_f64(is);
    s.params_hash = get_u64(is);
    s.field = LayeredField(nl, ny, nx);
    s.field.time = time;
    is.read(reinterpret_cast<char*>(s.field.v.data()), std::streamsize(s.field.v.size() * 8));
    if (!is) throw std::runtime_error("truncated snapshot: " + path.string());
    return s;
}

void write_closure(const std::filesystem::path& path, const closure::ClosureParams& p) {
    p.validate();
    auto os = open_out(path);
    os.write("CGCL", 4);
    put_u32(os, 1u);
    put_u32(os, p.family.id());
    put_u32(os, uint32_t(p.family.bands));
    put_u32(os, uint32_t(p.family.noise_channels()));
    put_u64(os, p.theta.size());
    os.write(reinterpret_cast<const char*>(p.theta.data()), std::streamsize(p.theta.size() * 8));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

closure::ClosureParams read_closure(const std::filesystem::path& path) {
    auto is = open_in(path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "CGCL", 4) != 0)
        throw std::runtime_error("bad closure magic in " + path.string());
    if (get_u32(is) != 1) throw std::runtime_error("unsupported closure blob version");
    const uint32_t id = get_u32(is);
    closure::ClosureFamily fam;
    fam.kind = closure::FamilyKind(id & 0xffu);
    fam.stochastic = (id & 0x100u) != 0;
    fam.bands = int(get_u32(is));
    const uint32_t noise_ch = get_u32(is);
    const uint64_t n = get_u64(is);
    closure::ClosureParams p{fam, std::vector<double>(n)};
    is.read(reinterpret_cast<char*>(p.theta.data()), std::streamsize(n * 8));
    if (!is) throw std::runtime_error("truncated closure blob: " + path.string());
    if (noise_ch != uint32_t(fam.noise_channels()))
        throw std::runtime_error("closure blob metadata inconsistent");
    p.validate();
    return p;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<LayeredField>& series,
                   DatasetManifest m) {
    std::filesystem::create_directories(dir);
    uint64_t data_hash = 14695981039346656037ull;
    for (int i = 0; i < int(series.size()); ++i) {
        write_snapshot(dir / snapshot_name(i), series[i], m.coarse_dt, m.params_hash);
        data_hash = fnv1a64(series[i].v.data(), series[i].v.size() * 8, data_hash);
    }
    m.count = int(series.size());
    m.data_hash = data_hash;
    m.code_version = kCodeVersion;
    if (!series.empty()) {
        m.nx = series[0].nx;
        m.ny = series[0].ny;
    }
    nlohmann::json j;
    j["format"] = "cgqg-dataset";
    j["config_hash"] = hex64(m.config_hash);
    j["dataset_seed"] = m.dataset_seed;
    j["params_hash"] = hex64(m.params_hash);
    j["data_hash"] = hex64(m.data_hash);
    j["count"] = m.count;
    j["nx"] = m.nx;
    j["ny"] = m.ny;
    j["coarse_dt"] = m.coarse_dt;
    j["code_version"] = m.code_version;
    std::ofstream os(dir / "manifest.json");
    os << j.dump(2) << "\n";
    if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw std::runtime_error("missing manifest.json in " + dir.string());
    nlohmann::json j;
    is >> j;
    DatasetManifest m;
    m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    m.dataset_seed = j.at("dataset_seed").get<uint64_t>();
    m.params_hash = std::stoull(j.at("params_hash").get<std::string>(), nullptr, 16);
    m.data_hash = std::stoull(j.at("data_hash").get<std::string>(), nullptr, 16);
    m.count = j.at("count").get<int>();
    m.nx = j.at("nx").get<int>();
    m.ny = j.at("ny").get<int>();
    m.coarse_dt = j.at("coarse_dt").get<double>();
    m.code_version = j.at("code_version").get<std::string>();
    return m;
}

std::vector<LayeredField> read_dataset(const std::filesystem::path& dir) {
    const DatasetManifest m = read_manifest(dir);
    std::vector<LayeredField> series;
    series.reserve(m.count);
    for (int i = 0; i < m.count; ++i)
        series.push_back(read_snapshot(dir / snapshot_name(i)).field);
    return series;
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvColumn>& cols,
               uint64_t config_hash) {
    auto os = open_out(path);
    os << "# config=" << hex64(config_hash) << " version=" << kCodeVersion << "\n";
    for (std::size_t c = 0; c < cols.size(); ++c)
        os << cols[c].name << (c + 1 < cols.size() ? "," : "\n");
    const std::size_t rows = cols.empty() ? 0 : cols[0].values.size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c)
            os << fmt_g17(cols[c].values[r]) << (c + 1 < cols.size() ? "," : "\n");
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<CsvColumn> read_csv(const std::filesystem::path& path) {
    auto is = open_in(path);
    std::string line;
    std::vector<CsvColumn> cols;
    bool header_done = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (!header_done) {
                cols.push_back({cell, {}});
            } else {
                if (c >= cols.size()) throw std::runtime_error("ragged csv: " + path.string());
                cols[c].values.push_back(std::stod(cell));
            }
            ++c;
        }
        header_done = true;
    }
    return cols;
}

void write_report(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, std::string>>& entries,
                  uint64_t config_hash) {
    auto os = open_out(path);
    os << "# config=" << hex64(config_hash) << " version=" << kCodeVersion << "\n";
    for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

uint64_t hash_file(const std::filesystem::path& path) {
    auto is = open_in(path);
    char buf[65536];
    uint64_t h = 14695981039346656037ull;
    while (is) {
        is.read(buf, sizeof(buf));
        h = fnv1a64(buf, std::size_t(is.gcount()), h);
    }
    return h;
}

}  // namespace cgqg::io
