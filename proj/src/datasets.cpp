#include "frekoo/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace frekoo {

Index DomainDataset::feature_dim() const {
    require(!domains.empty(), "DomainDataset: no domains");
    return domains.front().x.cols();
}

Index DomainDataset::total_samples() const {
    Index n = 0;
    for (const Domain& d : domains) {
        n += d.x.rows();
    }
    return n;
}

void DomainDataset::validate() const {
    require(domains.size() >= 2, "DomainDataset: need at least two domains");
    const Index d_in = domains.front().x.cols();
    for (std::size_t i = 0; i < domains.size(); ++i) {
        const Domain& dom = domains[i];
        const std::string where = "domain " + std::to_string(i);
        require(dom.x.rows() > 0, where + " is empty");
        require(dom.x.cols() == d_in, where + " has a different feature width");
        require(dom.x.rows() == dom.y.size(), where + " label count mismatch");
        require(all_finite(dom.x) && dom.y.allFinite(),
                where + " has non-finite values");
        if (label_kind == OutputKind::Classification) {
            for (Index r = 0; r < dom.y.size(); ++r) {
                const double label = dom.y(r);
                require(label == std::floor(label) && label >= 0.0 &&
                            label < static_cast<double>(num_classes),
                        where + " row " + std::to_string(r) +
                            ": label out of class range");
            }
        }
    }
}

namespace {

// 90 points per class on the standard interleaving half-circles, noise
// added per coordinate, then the whole cloud centered on its mean.
Matrix base_moons_points(std::uint64_t seed, int per_class, double noise_std) {
    const double kPi = 3.14159265358979323846;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    const int n = 2 * per_class;
    Matrix pts(n, 2);
    for (int i = 0; i < per_class; ++i) {
        const double t = per_class == 1
                             ? 0.0
                             : kPi * static_cast<double>(i) /
                                   static_cast<double>(per_class - 1);
        pts(i, 0) = std::cos(t) + noise(rng);
        pts(i, 1) = std::sin(t) + noise(rng);
    }
    for (int i = 0; i < per_class; ++i) {
        const double t = per_class == 1
                             ? 0.0
                             : kPi * static_cast<double>(i) /
                                   static_cast<double>(per_class - 1);
        pts(per_class + i, 0) = 1.0 - std::cos(t) + noise(rng);
        pts(per_class + i, 1) = 0.5 - std::sin(t) + noise(rng);
    }
    pts.rowwise() -= pts.colwise().mean();
    return pts;
}

Domain rotated_domain(const Matrix& base, int per_class, double degrees) {
    const double kPi = 3.14159265358979323846;
    const double rad = degrees * kPi / 180.0;
    Matrix rot(2, 2);
    rot << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
    Domain dom;
    dom.x = base * rot.transpose();  // rows are points; CCW rotation
    dom.y.resize(base.rows());
    dom.y.head(per_class).setZero();
    dom.y.tail(base.rows() - per_class).setOnes();
    return dom;
}

}  // namespace

DomainDataset gen_rotated_moons(std::uint64_t seed, int n_domains,
                                double degrees_per_domain, int per_class,
                                double noise_std) {
    require(n_domains >= 2, "gen_rotated_moons: need at least two domains");
    require(per_class >= 1, "gen_rotated_moons: per_class must be positive");
    const Matrix base = base_moons_points(seed, per_class, noise_std);
    DomainDataset out;
    out.name = "2-moons";
    out.label_kind = OutputKind::Classification;
    out.num_classes = 2;
    out.domains.reserve(static_cast<std::size_t>(n_domains));
    for (int k = 0; k < n_domains; ++k) {
        out.domains.push_back(
            rotated_domain(base, per_class, degrees_per_domain * k));
    }
    out.validate();
    return out;
}

std::vector<int> periodic_moons_index_walk() {
    std::vector<int> walk;
    for (int i = 0; i <= 9; ++i) walk.push_back(i);   // 0..9
    for (int i = 8; i >= 0; --i) walk.push_back(i);   // 8..0
    for (int i = 1; i <= 9; ++i) walk.push_back(i);   // 1..9
    for (int i = 8; i >= 0; --i) walk.push_back(i);   // 8..0
    return walk;
}

DomainDataset gen_periodic_moons(std::uint64_t seed) {
    const int per_class = 90;
    const Matrix base = base_moons_points(seed, per_class, 0.1);
    DomainDataset out;
    out.name = "p-moons";
    out.label_kind = OutputKind::Classification;
    out.num_classes = 2;
    const std::vector<int> walk = periodic_moons_index_walk();
    out.domains.reserve(walk.size());
    for (int idx : walk) {
        out.domains.push_back(rotated_domain(base, per_class, 18.0 * idx));
    }
    out.validate();
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // Trim surrounding whitespace and stray carriage returns.
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(first == std::string::npos
                             ? std::string()
                             : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_number(const std::string& text, std::size_t row,
                    const std::string& column) {
    try {
        std::size_t consumed = 0;
        const double value = std::stod(text, &consumed);
        if (consumed != text.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return value;
    } catch (const std::exception&) {
        throw IngestError("row " + std::to_string(row) + ", column '" + column +
                          "': cannot parse '" + text + "' as a number");
    }
}

std::size_t find_column(const std::vector<std::string>& header,
                        const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw IngestError("missing column '" + name + "' in header");
    }
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

DomainDataset load_csv_domains(const std::string& path, const CsvSchema& schema,
                               int n_domains, SplitMode split_mode) {
    if (n_domains < 2) {
        throw ConfigError("load_csv_domains: need at least two domains");
    }
    if (schema.feature_columns.empty()) {
        throw ConfigError("load_csv_domains: schema declares no feature columns");
    }
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw IngestError("'" + path + "' is empty (header row required)");
    }
    const std::vector<std::string> header = split_csv_line(line);
    const std::size_t time_idx = find_column(header, schema.time_column);
    std::vector<std::size_t> feature_idx;
    feature_idx.reserve(schema.feature_columns.size());
    for (const std::string& name : schema.feature_columns) {
        feature_idx.push_back(find_column(header, name));
    }
    const std::size_t label_idx = find_column(header, schema.label_column);

    struct Row {
        double time;
        std::vector<double> features;
        double label;
        std::size_t source_row;  // 1-based data row for error messages
    };
    std::vector<Row> rows;
    std::size_t row_number = 0;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty() || line == "\r") {
            continue;
        }
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw IngestError("row " + std::to_string(row_number) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        Row row;
        row.source_row = row_number;
        row.time = parse_number(fields[time_idx], row_number, schema.time_column);
        row.features.reserve(feature_idx.size());
        for (std::size_t j = 0; j < feature_idx.size(); ++j) {
            row.features.push_back(parse_number(fields[feature_idx[j]], row_number,
                                                schema.feature_columns[j]));
        }
        row.label = parse_number(fields[label_idx], row_number, schema.label_column);
        if (schema.label_kind == OutputKind::Classification) {
            if (row.label != std::floor(row.label) || row.label < 0.0 ||
                row.label >= static_cast<double>(schema.num_classes)) {
                throw IngestError("row " + std::to_string(row_number) +
                                  ": label out of class range");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < static_cast<std::size_t>(n_domains)) {
        throw IngestError("'" + path + "' has " + std::to_string(rows.size()) +
                          " data rows, fewer than " + std::to_string(n_domains) +
                          " domains");
    }

    if (schema.strict_time) {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (!(rows[i].time > rows[i - 1].time)) {
                throw IngestError(
                    "row " + std::to_string(rows[i].source_row) + ": time " +
                    std::to_string(rows[i].time) +
                    " does not increase over the previous row (strict order)");
            }
        }
    } else {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.time < b.time; });
    }

    // Contiguous chronological blocks.
    std::vector<std::vector<std::size_t>> blocks(
        static_cast<std::size_t>(n_domains));
    if (split_mode == SplitMode::EqualCount) {
        const std::size_t n = rows.size();
        const std::size_t base = n / static_cast<std::size_t>(n_domains);
        const std::size_t extra = n % static_cast<std::size_t>(n_domains);
        std::size_t cursor = 0;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const std::size_t count = base + (b < extra ? 1 : 0);
            for (std::size_t i = 0; i < count; ++i) {
                blocks[b].push_back(cursor++);
            }
        }
    } else {
        const double t_min = rows.front().time;
        const double t_max = rows.back().time;
        if (!(t_max > t_min)) {
            throw IngestError("time span is degenerate; cannot split by range");
        }
        const double span = (t_max - t_min) / static_cast<double>(n_domains);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto b = static_cast<std::size_t>((rows[i].time - t_min) / span);
            b = std::min(b, blocks.size() - 1);
            blocks[b].push_back(i);
        }
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].empty()) {
            throw IngestError("domain block " + std::to_string(b) +
                              " is empty after the chronological split");
        }
    }

    DomainDataset out;
    out.name = std::filesystem::path(path).stem().string();
    out.label_kind = schema.label_kind;
    out.num_classes = schema.num_classes;
    const Index d_in = static_cast<Index>(schema.feature_columns.size());
    for (const std::vector<std::size_t>& block : blocks) {
        Domain dom;
        dom.x.resize(static_cast<Index>(block.size()), d_in);
        dom.y.resize(static_cast<Index>(block.size()));
        for (std::size_t i = 0; i < block.size(); ++i) {
            const Row& row = rows[block[i]];
            for (Index j = 0; j < d_in; ++j) {
                dom.x(static_cast<Index>(i), j) = row.features[static_cast<std::size_t>(j)];
            }
            dom.y(static_cast<Index>(i)) = row.label;
        }
        out.domains.push_back(std::move(dom));
    }

    if (schema.standardize) {
        // Statistics over the source domains only; the last block is the
        // evaluation target and must not leak into them.
        Index n_train = 0;
        for (std::size_t b = 0; b + 1 < out.domains.size(); ++b) {
            n_train += out.domains[b].x.rows();
        }
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d_in);
        for (std::size_t b = 0; b + 1 < out.domains.size(); ++b) {
            mean += out.domains[b].x.colwise().sum();
        }
        mean /= static_cast<double>(n_train);
        Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(d_in);
        for (std::size_t b = 0; b + 1 < out.domains.size(); ++b) {
            var += (out.domains[b].x.rowwise() - mean).array().square().colwise().sum().matrix();
        }
        var /= static_cast<double>(n_train);
        Eigen::RowVectorXd scale = var.array().sqrt();
        for (Index j = 0; j < d_in; ++j) {
            if (scale(j) <= 0.0) scale(j) = 1.0;
        }
        for (Domain& dom : out.domains) {
            dom.x = (dom.x.rowwise() - mean).array().rowwise() / scale.array();
        }
        if (schema.label_kind == OutputKind::Regression) {
            double label_sum = 0.0;
            for (std::size_t b = 0; b + 1 < out.domains.size(); ++b) {
                label_sum += out.domains[b].y.sum();
            }
            out.label_mean = label_sum / static_cast<double>(n_train);
            double label_var = 0.0;
            for (std::size_t b = 0; b + 1 < out.domains.size(); ++b) {
                label_var += (out.domains[b].y.array() - out.label_mean).square().sum();
            }
            label_var /= static_cast<double>(n_train);
            out.label_std = label_var > 0.0 ? std::sqrt(label_var) : 1.0;
            for (Domain& dom : out.domains) {
                dom.y = (dom.y.array() - out.label_mean) / out.label_std;
            }
        }
    }

    out.validate();
    return out;
}

std::vector<std::string> export_csv(const DomainDataset& dataset,
                                    const std::string& out_dir) {
    dataset.validate();
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> paths;
    const Index d_in = dataset.feature_dim();
    for (std::size_t k = 0; k < dataset.domains.size(); ++k) {
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "_domain_%02zu.csv", k);
        const std::string path =
            (std::filesystem::path(out_dir) / (dataset.name + suffix)).string();
        std::ofstream out(path);
        if (!out) {
            throw IngestError("cannot write '" + path + "'");
        }
        for (Index j = 0; j < d_in; ++j) {
            out << "x" << j << ",";
        }
        out << "label\n";
        const Domain& dom = dataset.domains[k];
        char buf[64];
        for (Index r = 0; r < dom.x.rows(); ++r) {
            for (Index j = 0; j < d_in; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", dom.x(r, j));
                out << buf << ",";
            }
            if (dataset.label_kind == OutputKind::Classification) {
                out << static_cast<long long>(dom.y(r)) << "\n";
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", dom.y(r));
                out << buf << "\n";
            }
        }
        paths.push_back(path);
    }
    return paths;
}

}  // namespace frekoo
