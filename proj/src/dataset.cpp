#include "rcgan/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rcgan/rng.hpp"

namespace rcgan {

Vec AffineMap::apply(const Vec& x) const {
    return {m[0][0] * x[0] + m[0][1] * x[1] + shift[0],
            m[1][0] * x[0] + m[1][1] * x[1] + shift[1]};
}

AffineMap AffineMap::inverse() const {
    double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (std::abs(det) < 1e-300) {
        throw std::runtime_error("AffineMap: singular matrix has no inverse");
    }
    AffineMap inv;
    inv.m[0][0] = m[1][1] / det;
    inv.m[0][1] = -m[0][1] / det;
    inv.m[1][0] = -m[1][0] / det;
    inv.m[1][1] = m[0][0] / det;
    inv.shift[0] = -(inv.m[0][0] * shift[0] + inv.m[0][1] * shift[1]);
    inv.shift[1] = -(inv.m[1][0] * shift[0] + inv.m[1][1] * shift[1]);
    return inv;
}

AffineMap AffineMap::rotation_shift(double rotation_deg, const Vec& shift) {
    double th = rotation_deg * M_PI / 180.0;
    AffineMap a;
    a.m[0][0] = std::cos(th);
    a.m[0][1] = -std::sin(th);
    a.m[1][0] = std::sin(th);
    a.m[1][1] = std::cos(th);
    a.shift[0] = shift[0];
    a.shift[1] = shift[1];
    return a;
}

void DatasetConfig::validate() const {
    if (k < 2) throw std::invalid_argument("dataset: k must be >= 2");
    if (n_source_per_class < 0 || n_unlabeled_per_class < 0) {
        throw std::invalid_argument("dataset: counts must be >= 0");
    }
    if (n_shot < 1) throw std::invalid_argument("dataset: n_shot must be >= 1");
    if (!(noise_sigma > 0.0)) throw std::invalid_argument("dataset: noise_sigma must be > 0");
    if (shift.size() != 2) throw std::invalid_argument("dataset: shift must be a 2-vector");
}

nlohmann::json DatasetConfig::to_json() const {
    return nlohmann::json{{"k", k},
                          {"n_source_per_class", n_source_per_class},
                          {"n_shot", n_shot},
                          {"n_unlabeled_per_class", n_unlabeled_per_class},
                          {"rotation_deg", rotation_deg},
                          {"shift", shift},
                          {"class_sep", class_sep},
                          {"noise_sigma", noise_sigma},
                          {"seed", seed}};
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& j) {
    DatasetConfig c;
    if (j.contains("k")) c.k = j.at("k").get<int>();
    if (j.contains("n_source_per_class")) c.n_source_per_class = j.at("n_source_per_class").get<int>();
    if (j.contains("n_shot")) c.n_shot = j.at("n_shot").get<int>();
    if (j.contains("n_unlabeled_per_class")) c.n_unlabeled_per_class = j.at("n_unlabeled_per_class").get<int>();
    if (j.contains("rotation_deg")) c.rotation_deg = j.at("rotation_deg").get<double>();
    if (j.contains("shift")) c.shift = j.at("shift").get<Vec>();
    if (j.contains("class_sep")) c.class_sep = j.at("class_sep").get<double>();
    if (j.contains("noise_sigma")) c.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

namespace {

// Golden-angle placement: k points on the circle with irregular gaps, so no
// nontrivial rotation maps the class layout onto itself (symmetric layouts
// create marginally-indistinguishable class permutations that trap the
// adversarial map in misaligned basins).
double class_angle(int cls, int k) {
    (void)k;
    constexpr double kGolden = 0.61803398874989484;
    double frac = std::fmod(cls * kGolden, 1.0);
    return 2.0 * M_PI * frac;
}

}  // namespace

Vec SsdaDataset::class_mean_source(int cls, double class_sep) const {
    double th = class_angle(cls, k);
    return {class_sep * std::cos(th), class_sep * std::sin(th)};
}

SsdaDataset make_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    SsdaDataset ds;
    ds.k = cfg.k;
    ds.seed = cfg.seed;
    ds.domain_map = AffineMap::rotation_shift(cfg.rotation_deg, cfg.shift);
    Rng rng(cfg.seed);
    auto mean_of = [&](int cls) {
        double th = class_angle(cls, cfg.k);
        return Vec{cfg.class_sep * std::cos(th), cfg.class_sep * std::sin(th)};
    };
    for (int cls = 0; cls < cfg.k; ++cls) {
        Vec mu = mean_of(cls);
        for (int i = 0; i < cfg.n_source_per_class; ++i) {
            Vec x = {mu[0] + cfg.noise_sigma * rng.gaussian(),
                     mu[1] + cfg.noise_sigma * rng.gaussian()};
            ds.source.push_back({std::move(x), cls});
        }
    }
    // Target samples are domain_map images of fresh source-like draws; the
    // first n_shot per class keep their labels, the rest go to the unlabeled
    // pool with hidden labels.
    for (int cls = 0; cls < cfg.k; ++cls) {
        Vec mu = mean_of(cls);
        int total = cfg.n_shot + cfg.n_unlabeled_per_class;
        for (int i = 0; i < total; ++i) {
            Vec x0 = {mu[0] + cfg.noise_sigma * rng.gaussian(),
                      mu[1] + cfg.noise_sigma * rng.gaussian()};
            Vec x = ds.domain_map.apply(x0);
            if (i < cfg.n_shot) {
                ds.target_labeled.push_back({std::move(x), cls});
            } else {
                ds.target_unlabeled.push_back({std::move(x), cls});
            }
        }
    }
    return ds;
}

Vec ideal_transfer(const SsdaDataset& ds, const Vec& x) {
    return ds.domain_map.apply(x);
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_dataset_csv(const SsdaDataset& ds, const std::string& csv_path,
                      const std::string& meta_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write " + csv_path);
    out << "domain,split,x1,x2,y,y_hidden_flag\n";
    for (const auto& p : ds.source) {
        out << "source,labeled," << fmt_double(p.x[0]) << "," << fmt_double(p.x[1]) << ","
            << p.y << ",0\n";
    }
    for (const auto& p : ds.target_labeled) {
        out << "target,labeled," << fmt_double(p.x[0]) << "," << fmt_double(p.x[1]) << ","
            << p.y << ",0\n";
    }
    for (const auto& p : ds.target_unlabeled) {
        out << "target,unlabeled," << fmt_double(p.x[0]) << "," << fmt_double(p.x[1]) << ","
            << p.y << ",1\n";
    }
    nlohmann::json meta;
    meta["k"] = ds.k;
    meta["seed"] = ds.seed;
    meta["domain_map"] = {{"matrix", {{ds.domain_map.m[0][0], ds.domain_map.m[0][1]},
                                      {ds.domain_map.m[1][0], ds.domain_map.m[1][1]}}},
                          {"shift", {ds.domain_map.shift[0], ds.domain_map.shift[1]}}};
    std::ofstream mout(meta_path);
    if (!mout) throw std::runtime_error("cannot write " + meta_path);
    mout << meta.dump(2) << "\n";
}

SsdaDataset load_dataset_csv(const std::string& csv_path, const std::string& meta_path) {
    std::ifstream meta_in(meta_path);
    if (!meta_in) throw std::runtime_error("cannot read " + meta_path);
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    SsdaDataset ds;
    ds.k = meta.at("k").get<int>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    const auto& dm = meta.at("domain_map");
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) ds.domain_map.m[r][c] = dm.at("matrix")[r][c].get<double>();
        ds.domain_map.shift[r] = dm.at("shift")[r].get<double>();
    }
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot read " + csv_path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string domain, split, x1, x2, y, flag;
        std::getline(ss, domain, ',');
        std::getline(ss, split, ',');
        std::getline(ss, x1, ',');
        std::getline(ss, x2, ',');
        std::getline(ss, y, ',');
        std::getline(ss, flag, ',');
        LabeledPoint p{{std::stod(x1), std::stod(x2)}, std::stoi(y)};
        if (domain == "source") {
            ds.source.push_back(std::move(p));
        } else if (split == "labeled") {
            ds.target_labeled.push_back(std::move(p));
        } else {
            ds.target_unlabeled.push_back(std::move(p));
        }
    }
    return ds;
}

}  // namespace rcgan
