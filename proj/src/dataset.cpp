#include "uhddip/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "uhddip/errors.hpp"
#include "uhddip/png_io.hpp"
#include "uhddip/rng.hpp"

namespace uhddip {
namespace synth {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<ManifestEntry>& DatasetManifest::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "test") return test;
    throw UsageError("unknown split: " + name);
}

namespace {

json spec_to_json(const SynthSpec& s) {
    return json{{"kind", kind_name(s.kind)},
                {"noise_amount", s.noise_amount},
                {"crystallize_cell", s.crystallize_cell},
                {"motion_len", s.motion_len},
                {"motion_angle_deg", s.motion_angle_deg},
                {"threshold_level", s.threshold_level},
                {"gauss_radius", s.gauss_radius},
                {"flows", s.flows},
                {"seed", s.seed}};
}

SynthSpec spec_from_json(const json& j) {
    SynthSpec s;
    s.kind = kind_from_name(j.at("kind").get<std::string>());
    s.noise_amount = j.at("noise_amount").get<double>();
    s.crystallize_cell = j.at("crystallize_cell").get<int>();
    s.motion_len = j.at("motion_len").get<int>();
    s.motion_angle_deg = j.at("motion_angle_deg").get<double>();
    s.threshold_level = j.at("threshold_level").get<int>();
    s.gauss_radius = j.at("gauss_radius").get<double>();
    s.flows = j.at("flows").get<std::vector<double>>();
    s.seed = j.at("seed").get<uint64_t>();
    return s;
}

json entries_to_json(const std::vector<ManifestEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries)
        arr.push_back(json{{"clean", e.clean_path},
                           {"degraded", e.degraded_path},
                           {"mask", e.mask_path},
                           {"spec", spec_to_json(e.spec)}});
    return arr;
}

std::vector<ManifestEntry> entries_from_json(const json& arr) {
    std::vector<ManifestEntry> out;
    for (const auto& j : arr) {
        ManifestEntry e;
        e.clean_path = j.at("clean").get<std::string>();
        e.degraded_path = j.at("degraded").get<std::string>();
        e.mask_path = j.at("mask").get<std::string>();
        e.spec = spec_from_json(j.at("spec"));
        out.push_back(std::move(e));
    }
    return out;
}

std::string index_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d.png", i);
    return buf;
}

}  // namespace

void save_manifest(const DatasetManifest& m, const std::string& path) {
    json j{{"schema_version", m.schema_version},
           {"kind", kind_name(m.kind)},
           {"counts", {{"train", m.train.size()}, {"test", m.test.size()}}},
           {"train", entries_to_json(m.train)},
           {"test", entries_to_json(m.test)}};
    std::ofstream os(path);
    if (!os) throw IngestError("save_manifest: cannot write " + path);
    os << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IngestError("load_manifest: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw IngestError("load_manifest: " + path + ": " + e.what());
    }
    DatasetManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != 1)
        throw IngestError("load_manifest: unsupported schema version " +
                          std::to_string(m.schema_version));
    m.kind = kind_from_name(j.at("kind").get<std::string>());
    m.train = entries_from_json(j.at("train"));
    m.test = entries_from_json(j.at("test"));
    const auto counts = j.at("counts");
    if (counts.at("train").get<size_t>() != m.train.size() ||
        counts.at("test").get<size_t>() != m.test.size())
        throw IngestError("load_manifest: counts disagree with entry lists");
    m.root = fs::path(path).parent_path().string();
    return m;
}

DatasetManifest build_dataset(const std::string& clean_dir, const std::string& out_dir,
                              int n_train, int n_test, WeatherKind kind, uint64_t master_seed) {
    if (n_train < 0 || n_test < 0 || n_train + n_test == 0)
        throw UsageError("build_dataset: need a positive number of pairs");

    std::vector<fs::path> clean_files;
    if (!fs::is_directory(clean_dir))
        throw IngestError("build_dataset: clean dir not found: " + clean_dir);
    for (const auto& e : fs::directory_iterator(clean_dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            clean_files.push_back(e.path());
    std::sort(clean_files.begin(), clean_files.end());
    if (static_cast<int>(clean_files.size()) < n_train + n_test)
        throw UsageError("build_dataset: " + clean_dir + " holds " +
                         std::to_string(clean_files.size()) + " images, need " +
                         std::to_string(n_train + n_test));

    DatasetManifest manifest;
    manifest.kind = kind;
    manifest.root = out_dir;

    for (const std::string split : {"train", "test"}) {
        for (const std::string sub : {"input", "gt", "mask"})
            fs::create_directories(fs::path(out_dir) / split / sub);
    }

    for (int i = 0; i < n_train + n_test; ++i) {
        const bool is_train = i < n_train;
        const std::string split = is_train ? "train" : "test";
        const int local = is_train ? i : i - n_train;
        const std::string name = index_name(local);

        const ImageBuffer clean = io::read_png(clean_files[static_cast<size_t>(i)].string());
        SynthSpec spec = sample_spec(kind, master_seed, static_cast<uint64_t>(i));
        const ImageBuffer mask = gen_mask(spec, clean.h, clean.w);
        const ImageBuffer degraded = composite(clean, mask);

        ManifestEntry entry;
        entry.clean_path = split + "/gt/" + name;
        entry.degraded_path = split + "/input/" + name;
        entry.mask_path = split + "/mask/" + name;
        entry.spec = spec;

        io::write_png((fs::path(out_dir) / entry.clean_path).string(), clean);
        io::write_png((fs::path(out_dir) / entry.degraded_path).string(), degraded);
        io::write_png((fs::path(out_dir) / entry.mask_path).string(), mask);

        (is_train ? manifest.train : manifest.test).push_back(std::move(entry));
    }

    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return manifest;
}

}  // namespace synth
}  // namespace uhddip
