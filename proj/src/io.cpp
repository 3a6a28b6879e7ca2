#include "phaseinfo/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace phaseinfo {

namespace {

std::filesystem::path meta_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

void write_matrix_csv(const std::filesystem::path& path, const double* data, int rows, int cols) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw ValidationError("cannot open " + path.string() + " for writing");
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c)
            std::fprintf(f, c ? ",%.17g" : "%.17g", data[static_cast<std::size_t>(r) * cols + c]);
        std::fputc('\n', f);
    }
    std::fclose(f);
}

std::vector<std::vector<double>> read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.c_str();
        char* end = nullptr;
        while (*p) {
            const double v = std::strtod(p, &end);
            if (end == p) throw SchemaError("malformed CSV row in " + path.string());
            row.push_back(v);
            p = end;
            if (*p == ',') ++p;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw SchemaError("ragged CSV rows in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw SchemaError("empty CSV file " + path.string());
    return rows;
}

Meta load_meta(const std::filesystem::path& csv_path) {
    std::ifstream in(meta_path(csv_path));
    if (!in) throw SchemaError("missing sidecar " + meta_path(csv_path).string());
    Meta meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("invalid sidecar JSON: " + std::string(e.what()));
    }
    if (!meta.contains("schema_version") || meta["schema_version"].get<int>() != kSchemaVersion)
        throw SchemaError("unknown schema version in " + meta_path(csv_path).string() + "; this build reads v" +
                          std::to_string(kSchemaVersion));
    return meta;
}

void store_meta(const std::filesystem::path& csv_path, Meta meta) {
    meta["schema_version"] = kSchemaVersion;
    meta["build_id"] = kBuildId;
    std::ofstream out(meta_path(csv_path));
    if (!out) throw ValidationError("cannot open " + meta_path(csv_path).string() + " for writing");
    out << meta.dump(2) << "\n";
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash(const Meta& config) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
    return buf;
}

void write_ensemble(const PhaseEnsemble& ens, const std::filesystem::path& csv_path) {
    ens.validate();
    write_matrix_csv(csv_path, ens.samples.data(), ens.n_shots, ens.n_z);
    Meta meta = ens.meta;
    meta["grid_um"] = ens.grid;
    meta["dz_um"] = ens.dz;
    meta["n_shots"] = ens.n_shots;
    meta["n_z"] = ens.n_z;
    meta["units"] = "radians";
    store_meta(csv_path, std::move(meta));
}

PhaseEnsemble read_ensemble(const std::filesystem::path& csv_path) {
    const Meta meta = load_meta(csv_path);
    const auto rows = read_matrix_csv(csv_path);

    PhaseEnsemble ens;
    ens.n_shots = static_cast<int>(rows.size());
    ens.n_z = static_cast<int>(rows.front().size());
    ens.samples.reserve(static_cast<std::size_t>(ens.n_shots) * ens.n_z);
    for (const auto& row : rows) ens.samples.insert(ens.samples.end(), row.begin(), row.end());

    if (!meta.contains("grid_um")) throw SchemaError("sidecar lacks grid_um");
    ens.grid = meta["grid_um"].get<std::vector<double>>();
    ens.dz = meta.value("dz_um", ens.grid.size() > 1 ? ens.grid[1] - ens.grid[0] : 0.0);
    ens.meta = meta;
    ens.meta.erase("grid_um");
    ens.meta.erase("dz_um");
    ens.meta.erase("n_shots");
    ens.meta.erase("n_z");
    ens.validate();
    return ens;
}

void write_interferogram(const Interferogram& img, const std::filesystem::path& csv_path) {
    write_matrix_csv(csv_path, img.image.data(), img.n_z, img.n_x);
    Meta meta;
    meta["kind"] = "interferogram";
    meta["x_grid_um"] = img.x_grid;
    meta["n_z"] = img.n_z;
    meta["n_x"] = img.n_x;
    meta["units"] = "counts";
    if (img.truth) {
        Meta truth = Meta::array();
        for (const auto& t : *img.truth) {
            truth.push_back({{"A", t.amplitude},
                             {"B", t.offset},
                             {"C", t.contrast},
                             {"lambda_F_um", t.lambda_f},
                             {"x0_um", t.x0},
                             {"sigma_TOF_um", t.sigma_tof},
                             {"phi", t.phi}});
        }
        meta["truth"] = std::move(truth);
    }
    store_meta(csv_path, std::move(meta));
}

Interferogram read_interferogram(const std::filesystem::path& csv_path) {
    const Meta meta = load_meta(csv_path);
    const auto rows = read_matrix_csv(csv_path);
    Interferogram img;
    img.n_z = static_cast<int>(rows.size());
    img.n_x = static_cast<int>(rows.front().size());
    img.image.reserve(static_cast<std::size_t>(img.n_z) * img.n_x);
    for (const auto& row : rows) img.image.insert(img.image.end(), row.begin(), row.end());
    if (!meta.contains("x_grid_um")) throw SchemaError("sidecar lacks x_grid_um");
    img.x_grid = meta["x_grid_um"].get<std::vector<double>>();
    if (static_cast<int>(img.x_grid.size()) != img.n_x) throw SchemaError("x grid does not match image width");
    if (meta.contains("truth")) {
        std::vector<SliceParams> truth;
        for (const auto& t : meta["truth"]) {
            SliceParams p;
            p.amplitude = t.at("A").get<double>();
            p.offset = t.at("B").get<double>();
            p.contrast = t.at("C").get<double>();
            p.lambda_f = t.at("lambda_F_um").get<double>();
            p.x0 = t.at("x0_um").get<double>();
            p.sigma_tof = t.at("sigma_TOF_um").get<double>();
            p.phi = t.at("phi").get<double>();
            truth.push_back(p);
        }
        img.truth = std::move(truth);
    }
    return img;
}

Meta estimate_to_json(const EstimateWithCI& est) {
    Meta j;
    j["value"] = est.value;
    j["std_error"] = est.std_error;
    j["ci95"] = {est.ci_lo, est.ci_hi};
    j["units"] = to_string(est.units);
    j["k"] = est.k;
    j["n_samples"] = est.n_samples;
    j["method"] = est.method;
    return j;
}

EstimateWithCI estimate_from_json(const Meta& j) {
    EstimateWithCI est;
    est.value = j.at("value").get<double>();
    est.std_error = j.at("std_error").get<double>();
    est.ci_lo = j.at("ci95")[0].get<double>();
    est.ci_hi = j.at("ci95")[1].get<double>();
    est.units = j.at("units").get<std::string>() == "bits" ? Units::bits : Units::nats;
    est.k = j.value("k", 0);
    est.n_samples = j.value("n_samples", 0);
    est.method = j.value("method", "");
    return est;
}

void write_scan(const ScanResult& scan, const std::filesystem::path& base_path, Units units) {
    Meta j;
    j["schema_version"] = kSchemaVersion;
    j["build_id"] = kBuildId;
    j["kind"] = to_string(scan.kind);
    j["metadata"] = scan.metadata;
    Meta rows = Meta::array();
    for (const auto& row : scan.rows) {
        const EstimateWithCI est = units == Units::bits ? row.estimate.to_bits() : row.estimate.to_nats();
        Meta r;
        r["x"] = row.x;
        r["x_label"] = row.x_label;
        r["partition"] = row.partition_id;
        r["boundary_count"] = row.boundary_count;
        r["estimate"] = estimate_to_json(est);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);

    std::filesystem::path json_path = base_path;
    json_path += ".json";
    std::ofstream out(json_path);
    if (!out) throw ValidationError("cannot open " + json_path.string() + " for writing");
    out << j.dump(2) << "\n";

    std::filesystem::path csv_path = base_path;
    csv_path += ".csv";
    std::FILE* f = std::fopen(csv_path.string().c_str(), "w");
    if (!f) throw ValidationError("cannot open " + csv_path.string() + " for writing");
    std::fprintf(f, "x,x_label,partition,boundary_count,value,std_error,ci_lo,ci_hi,units\n");
    for (const auto& row : scan.rows) {
        const EstimateWithCI est = units == Units::bits ? row.estimate.to_bits() : row.estimate.to_nats();
        std::fprintf(f, "%.17g,%s,\"%s\",%d,%.17g,%.17g,%.17g,%.17g,%s\n", row.x, row.x_label.c_str(),
                     row.partition_id.c_str(), row.boundary_count, est.value, est.std_error, est.ci_lo,
                     est.ci_hi, to_string(est.units));
    }
    std::fclose(f);
}

ScanResult read_scan(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw SchemaError("cannot open " + json_path.string());
    Meta j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("invalid scan JSON: " + std::string(e.what()));
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion)
        throw SchemaError("unknown scan schema version");
    ScanResult scan;
    const std::string kind = j.at("kind").get<std::string>();
    for (ScanKind k : {ScanKind::volume, ScanKind::area, ScanKind::separation, ScanKind::q, ScanKind::nongauss})
        if (kind == to_string(k)) scan.kind = k;
    scan.metadata = j.value("metadata", Meta::object());
    for (const auto& r : j.at("rows")) {
        ScanRow row;
        row.x = r.at("x").get<double>();
        row.x_label = r.value("x_label", "");
        row.partition_id = r.value("partition", "");
        row.boundary_count = r.value("boundary_count", -1);
        row.estimate = estimate_from_json(r.at("estimate"));
        scan.rows.push_back(std::move(row));
    }
    return scan;
}

}  // namespace phaseinfo
