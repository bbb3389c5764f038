#pragma once

// Deterministic two-domain synthetic datasets over 2D features. Source
// classes are Gaussians on a circle; the target domain is their image under a
// known affine map (rotation + shift), which doubles as an exact oracle for
// generator quality.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rcgan/numeric.hpp"

namespace rcgan {

struct AffineMap {
    double m[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    double shift[2] = {0.0, 0.0};

    Vec apply(const Vec& x) const;
    AffineMap inverse() const;
    static AffineMap rotation_shift(double rotation_deg, const Vec& shift);
};

struct DatasetConfig {
    int k = 4;
    int n_source_per_class = 500;
    int n_shot = 1;
    int n_unlabeled_per_class = 500;
    double rotation_deg = 60.0;
    Vec shift = {4.0, 4.0};
    double class_sep = 6.0;
    double noise_sigma = 0.6;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static DatasetConfig from_json(const nlohmann::json& j);
};

struct SsdaDataset {
    int k = 0;
    std::vector<LabeledPoint> source;
    std::vector<LabeledPoint> target_labeled;
    // y holds the hidden label, retained for evaluation only.
    std::vector<LabeledPoint> target_unlabeled;
    AffineMap domain_map;
    std::uint64_t seed = 0;

    Vec class_mean_source(int cls, double class_sep) const;
};

SsdaDataset make_dataset(const DatasetConfig& cfg);

// Ground-truth source-to-target map.
Vec ideal_transfer(const SsdaDataset& ds, const Vec& x);

// CSV columns: domain,split,x1,x2,y,y_hidden_flag. The JSON sidecar carries
// the domain map and seed.
void save_dataset_csv(const SsdaDataset& ds, const std::string& csv_path,
                      const std::string& meta_path);
SsdaDataset load_dataset_csv(const std::string& csv_path, const std::string& meta_path);

}  // namespace rcgan
