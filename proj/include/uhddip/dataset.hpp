#pragma once

#include <string>
#include <vector>

#include "uhddip/synth.hpp"

namespace uhddip {
namespace synth {

// One clean/degraded/mask file triple plus the recipe that produced it.
// Paths are relative to the manifest's directory.
struct ManifestEntry {
    std::string clean_path;
    std::string degraded_path;
    std::string mask_path;
    SynthSpec spec;
};

struct DatasetManifest {
    int schema_version = 1;
    WeatherKind kind = WeatherKind::kSnow;
    std::vector<ManifestEntry> train;
    std::vector<ManifestEntry> test;
    std::string root;  // directory holding manifest.json; set on load

    const std::vector<ManifestEntry>& split(const std::string& name) const;
};

// Synthesizes a degraded dataset from the clean images in clean_dir
// (sorted PNG listing, first n_train for training, next n_test for test).
// Layout: out_dir/{train,test}/{input,gt,mask}/NNNNN.png + manifest.json.
// Fully determined by (clean set, master_seed).
DatasetManifest build_dataset(const std::string& clean_dir, const std::string& out_dir,
                              int n_train, int n_test, WeatherKind kind, uint64_t master_seed);

void save_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

}  // namespace synth
}  // namespace uhddip
