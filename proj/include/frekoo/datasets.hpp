#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "frekoo/base_model.hpp"
#include "frekoo/common.hpp"

namespace frekoo {

struct Domain {
    Matrix x;  // N x d_in
    Vector y;  // class index or scalar target
};

struct DomainDataset {
    std::string name;
    OutputKind label_kind = OutputKind::Classification;
    Index num_classes = 2;  // meaningful for classification only
    std::vector<Domain> domains;
    // Label scale used when regression targets were standardized; metrics
    // report on the original scale.
    double label_mean = 0.0;
    double label_std = 1.0;

    Index feature_dim() const;
    Index total_samples() const;
    void validate() const;
};

// Two interleaving half-circles, 90 points per class with N(0, 0.1^2)
// coordinate noise, centered, then rotated k*18 degrees counter-clockwise
// for domain k. One shared base draw so rotating domain k's points by 18
// degrees reproduces domain k+1 exactly.
DomainDataset gen_rotated_moons(std::uint64_t seed, int n_domains = 10,
                                double degrees_per_domain = 18.0,
                                int per_class = 90, double noise_std = 0.1);

// Rotation-index walk 0..9, 8..0, 1..9, 8..0 (37 domains) over the same
// base cloud; recurring indices reuse the identical point set.
DomainDataset gen_periodic_moons(std::uint64_t seed);

// The 37-entry index sequence used by gen_periodic_moons.
std::vector<int> periodic_moons_index_walk();

enum class SplitMode { EqualCount, TimeRange };

struct CsvSchema {
    std::string time_column;
    std::vector<std::string> feature_columns;
    std::string label_column;
    OutputKind label_kind = OutputKind::Classification;
    Index num_classes = 2;
    bool strict_time = false;  // reject any non-increasing time pair
    bool standardize = true;   // z-score features (and regression labels)
                               // using statistics of all but the last domain
};

DomainDataset load_csv_domains(const std::string& path, const CsvSchema& schema,
                               int n_domains, SplitMode split_mode);

// One file per domain under out_dir: <name>_domain_XX.csv with header
// x0,...,x{d-1},label. Returns the file paths in domain order.
std::vector<std::string> export_csv(const DomainDataset& dataset,
                                    const std::string& out_dir);

}  // namespace frekoo
