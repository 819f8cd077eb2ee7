#include "kho/io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kho {

namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot formats are defined as little-endian");

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_param_key(const std::string& key) {
    if (key.empty() || key.find_first_of(" \t\r\n") != std::string::npos)
        throw ConfigError("parameter keys must be non-empty and contain no whitespace");
}

void write_params(std::ostream& out, const ParamList& params) {
    for (const auto& [key, value] : params) {
        check_param_key(key);
        if (value.find_first_of("\r\n") != std::string::npos)
            throw ConfigError("parameter values must be single-line");
        out << "param " << key << ' ' << value << '\n';
    }
}

std::ofstream open_binary_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_binary_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open for reading: " + path);
    return in;
}

std::string next_line(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("truncated header in " + path);
    return line;
}

double parse_real(const std::string& token, const std::string& path) {
    try {
        size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric field '" + token + "' in " + path);
    }
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    return fields;
}

// Reads "param key value..." lines until the terminator line is seen.
ParamList read_params_until(std::istream& in, const std::string& terminator,
                            const std::string& path) {
    ParamList params;
    for (;;) {
        const std::string line = next_line(in, path);
        if (line == terminator) return params;
        if (line.rfind("param ", 0) != 0)
            throw ConfigError("unexpected header line '" + line + "' in " + path);
        const size_t key_start = 6;
        const size_t key_end = line.find(' ', key_start);
        if (key_end == std::string::npos || key_end == key_start)
            throw ConfigError("malformed param line in " + path);
        params.emplace_back(line.substr(key_start, key_end - key_start),
                            line.substr(key_end + 1));
    }
}

void write_reals(std::ostream& out, const std::vector<double>& values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_reals(std::istream& in, std::vector<double>& values, const std::string& path) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (static_cast<size_t>(in.gcount()) != values.size() * sizeof(double))
        throw ConfigError("truncated data block in " + path);
}

} // namespace

void write_grid_snapshot(const std::string& path, const PhaseSpaceGrid& grid,
                         const ParamList& params) {
    grid.spec.validate();
    auto out = open_binary_out(path);
    out << "KHOGRID v1\n";
    out << "label " << to_string(grid.label) << '\n';
    out << "size " << grid.spec.n_q << ' ' << grid.spec.n_p << '\n';
    out << "window " << format_real(grid.spec.q_min) << ' ' << format_real(grid.spec.q_max) << ' '
        << format_real(grid.spec.p_min) << ' ' << format_real(grid.spec.p_max) << '\n';
    write_params(out, params);
    out << "data\n";
    write_reals(out, grid.values);
    if (!out) throw ConfigError("write failed: " + path);
}

GridSnapshot read_grid_snapshot(const std::string& path) {
    auto in = open_binary_in(path);
    if (next_line(in, path) != "KHOGRID v1") throw ConfigError("not a KHOGRID v1 file: " + path);

    const auto label_fields = split_fields(next_line(in, path));
    if (label_fields.size() != 2 || label_fields[0] != "label")
        throw ConfigError("missing label line in " + path);

    const auto size_fields = split_fields(next_line(in, path));
    if (size_fields.size() != 3 || size_fields[0] != "size")
        throw ConfigError("missing size line in " + path);

    const auto window_fields = split_fields(next_line(in, path));
    if (window_fields.size() != 5 || window_fields[0] != "window")
        throw ConfigError("missing window line in " + path);

    GridSpec spec;
    spec.n_q = static_cast<int>(parse_real(size_fields[1], path));
    spec.n_p = static_cast<int>(parse_real(size_fields[2], path));
    spec.q_min = parse_real(window_fields[1], path);
    spec.q_max = parse_real(window_fields[2], path);
    spec.p_min = parse_real(window_fields[3], path);
    spec.p_max = parse_real(window_fields[4], path);
    spec.validate();

    GridSnapshot snap;
    snap.params = read_params_until(in, "data", path);
    snap.grid = PhaseSpaceGrid::zeros(spec, grid_label_from_string(label_fields[1]));
    read_reals(in, snap.grid.values, path);
    return snap;
}

void write_ensemble_snapshot(const std::string& path, const TrajectoryEnsemble& ens,
                             const ParamList& params) {
    auto out = open_binary_out(path);
    out << "KHOENS v1\n";
    out << "size " << ens.size() << '\n';
    out << "seed " << ens.seed << '\n';
    out << "steps " << ens.step_count << '\n';
    write_params(out, params);
    out << "data\n";
    write_reals(out, ens.q);
    write_reals(out, ens.p);
    if (!out) throw ConfigError("write failed: " + path);
}

TrajectoryEnsemble read_ensemble_snapshot(const std::string& path) {
    auto in = open_binary_in(path);
    if (next_line(in, path) != "KHOENS v1") throw ConfigError("not a KHOENS v1 file: " + path);

    const auto size_fields = split_fields(next_line(in, path));
    if (size_fields.size() != 2 || size_fields[0] != "size")
        throw ConfigError("missing size line in " + path);
    const auto seed_fields = split_fields(next_line(in, path));
    if (seed_fields.size() != 2 || seed_fields[0] != "seed")
        throw ConfigError("missing seed line in " + path);
    const auto step_fields = split_fields(next_line(in, path));
    if (step_fields.size() != 2 || step_fields[0] != "steps")
        throw ConfigError("missing steps line in " + path);

    const long long m = std::stoll(size_fields[1]);
    if (m < 1) throw ConfigError("ensemble snapshot holds no trajectories: " + path);

    TrajectoryEnsemble ens;
    ens.seed = std::stoull(seed_fields[1]);
    ens.step_count = std::stoull(step_fields[1]);
    read_params_until(in, "data", path);
    ens.q.resize(static_cast<size_t>(m));
    ens.p.resize(static_cast<size_t>(m));
    read_reals(in, ens.q, path);
    read_reals(in, ens.p, path);
    return ens;
}

void write_distance_csv(const std::string& path, const DistanceSeries& series,
                        const ParamList& extra) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "# K " << format_real(series.params.K) << '\n';
    out << "# eta " << format_real(series.params.eta) << '\n';
    out << "# nu_tau " << format_real(series.params.nu_tau) << '\n';
    out << "# tau " << format_real(series.params.tau) << '\n';
    out << "# D " << format_real(series.deco.D) << '\n';
    out << "# gamma_tau " << format_real(series.deco.gamma_tau) << '\n';
    out << "# nbar " << format_real(series.deco.nbar) << '\n';
    out << "# chi " << format_real(series.chi_value) << '\n';
    static const char* builtin[] = {"K", "eta", "nu_tau", "tau", "D", "gamma_tau", "nbar", "chi"};
    for (const auto& [key, value] : extra) {
        // the series' own parameters are authoritative; keep extras disjoint
        if (std::find_if(std::begin(builtin), std::end(builtin),
                         [&](const char* b) { return key == b; }) != std::end(builtin))
            continue;
        check_param_key(key);
        out << "# " << key << ' ' << value << '\n';
    }
    out << "n,distance,norm_q,norm_cl,negativity\n";
    for (const auto& r : series.records) {
        out << r.n << ',' << format_real(r.distance) << ',' << format_real(r.norm_q) << ','
            << format_real(r.norm_cl) << ',' << format_real(r.negativity) << '\n';
    }
    if (!out) throw ConfigError("write failed: " + path);
}

Palette palette_from_string(const std::string& s) {
    if (s == "signed") return Palette::diverging;
    if (s == "unsigned") return Palette::sequential;
    throw ConfigError("unknown palette '" + s + "' (use signed or unsigned)");
}

namespace {

struct Rgb {
    unsigned char r, g, b;
};

unsigned char channel(double v) {
    return static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

// u in [-1, 1]: blue for negative values through white at zero to red.
Rgb diverging_color(double u) {
    if (u >= 0.0) return {255, channel(1.0 - u), channel(1.0 - u)};
    return {channel(1.0 + u), channel(1.0 + u), 255};
}

// u in [0, 1]: black body style ramp black - red - yellow - white.
Rgb sequential_color(double u) {
    return {channel(3.0 * u), channel(3.0 * u - 1.0), channel(3.0 * u - 2.0)};
}

} // namespace

void write_heatmap_ppm(const std::string& path, const PhaseSpaceGrid& grid, Palette palette) {
    grid.spec.validate();
    double max_abs = 0.0, max_val = 0.0;
    for (const double v : grid.values) {
        max_abs = std::max(max_abs, std::abs(v));
        max_val = std::max(max_val, v);
    }
    auto out = open_binary_out(path);
    out << "P6\n" << grid.spec.n_q << ' ' << grid.spec.n_p << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(grid.spec.n_q) * 3);
    for (int l = grid.spec.n_p - 1; l >= 0; --l) { // top image row = p_max
        for (int i = 0; i < grid.spec.n_q; ++i) {
            const double v = grid.at(i, l);
            Rgb c;
            if (palette == Palette::diverging)
                c = max_abs > 0.0 ? diverging_color(v / max_abs) : Rgb{255, 255, 255};
            else
                c = max_val > 0.0 ? sequential_color(std::max(v, 0.0) / max_val) : Rgb{0, 0, 0};
            row[static_cast<size_t>(i) * 3 + 0] = c.r;
            row[static_cast<size_t>(i) * 3 + 1] = c.g;
            row[static_cast<size_t>(i) * 3 + 2] = c.b;
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw ConfigError("write failed: " + path);
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xCBF29CE484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001B3ull;
    }
    return hash;
}

std::uint64_t file_fnv1a64(const std::string& path) {
    auto in = open_binary_in(path);
    std::uint64_t hash = 0xCBF29CE484222325ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001B3ull;
        }
    }
    return hash;
}

namespace {

nlohmann::json params_to_json(const ParamList& params) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : params) j[key] = value;
    return j;
}

ParamList params_from_json(const nlohmann::json& j) {
    ParamList params;
    for (const auto& [key, value] : j.items())
        params.emplace_back(key, value.get<std::string>());
    return params;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

std::uint64_t hash_from_hex(const std::string& s) {
    if (s.size() != 16) throw ConfigError("manifest checksum must be 16 hex digits");
    return std::stoull(s, nullptr, 16);
}

} // namespace

void write_manifest(const std::string& path, const Manifest& manifest) {
    nlohmann::json j;
    j["format"] = "kho-manifest-v1";
    j["scenario"] = manifest.scenario;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : manifest.entries) {
        nlohmann::json je;
        je["path"] = e.path;
        je["kind"] = e.kind;
        je["scenario"] = e.scenario;
        je["params"] = params_to_json(e.params);
        je["bytes"] = e.bytes;
        je["checksum"] = hash_hex(e.checksum);
        j["entries"].push_back(std::move(je));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("write failed: " + path);
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open for reading: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest is not valid JSON: " + std::string(e.what()));
    }
    try {
        if (j.at("format").get<std::string>() != "kho-manifest-v1")
            throw ConfigError("unknown manifest format in " + path);
        Manifest m;
        m.scenario = j.at("scenario").get<std::string>();
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.path = je.at("path").get<std::string>();
            e.kind = je.at("kind").get<std::string>();
            e.scenario = je.at("scenario").get<std::string>();
            e.params = params_from_json(je.at("params"));
            e.bytes = je.at("bytes").get<std::uint64_t>();
            e.checksum = hash_from_hex(je.at("checksum").get<std::string>());
            m.entries.push_back(std::move(e));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest is missing fields: " + std::string(e.what()));
    }
}

std::vector<std::string> verify_manifest(const std::string& path) {
    const Manifest m = read_manifest(path);
    const auto base = std::filesystem::path(path).parent_path();
    std::vector<std::string> bad;
    for (const auto& e : m.entries) {
        const auto full = base / e.path;
        std::error_code ec;
        const auto size = std::filesystem::file_size(full, ec);
        if (ec || size != e.bytes || file_fnv1a64(full.string()) != e.checksum)
            bad.push_back(e.path);
    }
    return bad;
}

} // namespace kho
