#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "doctest.h"
#include "frekoo/datasets.hpp"

using namespace frekoo;

namespace {

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("frekoo_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    static int& counter() {
        static int n = 0;
        return n;
    }

    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

Matrix rotate(const Matrix& points, double degrees) {
    const double rad = degrees * M_PI / 180.0;
    Matrix rot(2, 2);
    rot << std::cos(rad), -std::sin(rad), std::sin(rad), std::cos(rad);
    return points * rot.transpose();
}

}  // namespace

TEST_CASE("gen_rotated_moons: shapes, balance, and centering") {
    const DomainDataset data = gen_rotated_moons(7);
    CHECK(data.label_kind == OutputKind::Classification);
    CHECK(data.num_classes == 2);
    REQUIRE(data.domains.size() == 10);
    CHECK(data.feature_dim() == 2);
    CHECK(data.total_samples() == 1800);
    for (const Domain& domain : data.domains) {
        CHECK(domain.x.rows() == 180);
        CHECK(domain.x.cols() == 2);
        CHECK(domain.y.size() == 180);
        Index ones = 0;
        for (Index i = 0; i < domain.y.size(); ++i) {
            CHECK((domain.y(i) == 0.0 || domain.y(i) == 1.0));
            ones += domain.y(i) == 1.0 ? 1 : 0;
        }
        CHECK(ones == 90);
    }
    // The base cloud is mean-centered before rotation, so every rotated copy
    // is mean-centered too.
    for (const Domain& domain : data.domains) {
        CHECK(domain.x.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("gen_rotated_moons: consecutive domains differ by one 18-degree rotation") {
    const DomainDataset data = gen_rotated_moons(11);
    for (std::size_t k = 0; k + 1 < data.domains.size(); ++k) {
        const Matrix expected = rotate(data.domains[k].x, 18.0);
        CHECK((data.domains[k + 1].x - expected).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((data.domains[k + 1].y - data.domains[k].y).cwiseAbs().maxCoeff() ==
              0.0);
    }
    // Domain 0 is the unrotated base cloud, reproducible by seed.
    const DomainDataset again = gen_rotated_moons(11);
    CHECK((again.domains[0].x - data.domains[0].x).cwiseAbs().maxCoeff() == 0.0);
    const DomainDataset other = gen_rotated_moons(12);
    CHECK((other.domains[0].x - data.domains[0].x).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gen_rotated_moons: moons are roughly interleaved half circles") {
    // With noise off the classes trace exact half circles: class 0 on the unit
    // circle's top half, class 1 shifted by (1, 0.5) with the bottom half.
    const DomainDataset data = gen_rotated_moons(3, 2, 18.0, 90, 0.0);
    const Domain& base = data.domains[0];
    Matrix uncentered = base.x;
    // Undo centering: class means of the noiseless construction are known.
    // Class 0: (cos t, sin t), t in [0, pi]. Class 1: (1 - cos t, 0.5 - sin t).
    double max_err = 0.0;
    Eigen::RowVector2d mean = Eigen::RowVector2d::Zero();
    for (int i = 0; i < 90; ++i) {
        const double t = M_PI * i / 89.0;
        mean += Eigen::RowVector2d(std::cos(t), std::sin(t));
        mean += Eigen::RowVector2d(1.0 - std::cos(t), 0.5 - std::sin(t));
    }
    mean /= 180.0;
    for (int i = 0; i < 90; ++i) {
        const double t = M_PI * i / 89.0;
        const Eigen::RowVector2d c0 =
            Eigen::RowVector2d(std::cos(t), std::sin(t)) - mean;
        const Eigen::RowVector2d c1 =
            Eigen::RowVector2d(1.0 - std::cos(t), 0.5 - std::sin(t)) - mean;
        max_err = std::max(max_err, (uncentered.row(i) - c0).cwiseAbs().maxCoeff());
        max_err = std::max(
            max_err, (uncentered.row(90 + i) - c1).cwiseAbs().maxCoeff());
    }
    CHECK(max_err < 1e-9);
    for (int i = 0; i < 90; ++i) {
        CHECK(base.y(i) == 0.0);
        CHECK(base.y(90 + i) == 1.0);
    }
}

TEST_CASE("periodic_moons_index_walk: 37 indices sweeping back and forth") {
    const std::vector<int> walk = periodic_moons_index_walk();
    REQUIRE(walk.size() == 37);
    CHECK(walk.front() == 0);
    CHECK(walk.back() == 0);
    // 0..9 up, 8..0 down, 1..9 up, 8..0 down.
    std::vector<int> expected;
    for (int i = 0; i <= 9; ++i) expected.push_back(i);
    for (int i = 8; i >= 0; --i) expected.push_back(i);
    for (int i = 1; i <= 9; ++i) expected.push_back(i);
    for (int i = 8; i >= 0; --i) expected.push_back(i);
    CHECK(walk == expected);
    for (std::size_t i = 0; i + 1 < walk.size(); ++i) {
        CHECK(std::abs(walk[i + 1] - walk[i]) == 1);
    }
}

TEST_CASE("gen_periodic_moons: revisited indices reuse identical point sets") {
    const DomainDataset data = gen_periodic_moons(19);
    REQUIRE(data.domains.size() == 37);
    const std::vector<int> walk = periodic_moons_index_walk();

    const DomainDataset straight = gen_rotated_moons(19);
    for (std::size_t i = 0; i < walk.size(); ++i) {
        const Domain& expected = straight.domains[static_cast<std::size_t>(walk[i])];
        CHECK((data.domains[i].x - expected.x).cwiseAbs().maxCoeff() == 0.0);
        CHECK((data.domains[i].y - expected.y).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("load_csv_domains: equal-count split preserves time order") {
    TempDir dir;
    std::string body = "t,f0,f1,label\n";
    for (int i = 0; i < 60; ++i) {
        body += std::to_string(i) + "," + std::to_string(0.1 * i) + "," +
                std::to_string(-0.05 * i) + "," + std::to_string(i % 2) + "\n";
    }
    const std::string path = dir.file("stream.csv");
    write_file(path, body);

    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"f0", "f1"};
    schema.label_column = "label";
    schema.standardize = false;

    const DomainDataset data =
        load_csv_domains(path, schema, 6, SplitMode::EqualCount);
    REQUIRE(data.domains.size() == 6);
    for (const Domain& domain : data.domains) {
        CHECK(domain.x.rows() == 10);
    }
    // Row 17 lands in domain 1, position 7, exactly as written.
    CHECK(data.domains[1].x(7, 0) == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(data.domains[1].x(7, 1) == doctest::Approx(-0.85).epsilon(1e-12));
    CHECK(data.domains[1].y(7) == 1.0);
}

TEST_CASE("load_csv_domains: equal-count remainder goes to earlier blocks") {
    TempDir dir;
    std::string body = "t,f0,label\n";
    for (int i = 0; i < 13; ++i) {
        body += std::to_string(i) + ",1.0,0\n";
    }
    const std::string path = dir.file("odd.csv");
    write_file(path, body);

    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"f0"};
    schema.label_column = "label";
    schema.standardize = false;

    const DomainDataset data =
        load_csv_domains(path, schema, 4, SplitMode::EqualCount);
    REQUIRE(data.domains.size() == 4);
    CHECK(data.domains[0].x.rows() == 4);
    CHECK(data.domains[1].x.rows() == 3);
    CHECK(data.domains[2].x.rows() == 3);
    CHECK(data.domains[3].x.rows() == 3);
}

TEST_CASE("load_csv_domains: unsorted rows are stably sorted by time") {
    TempDir dir;
    write_file(dir.file("shuffled.csv"),
               "t,f0,label\n"
               "3,30.0,1\n"
               "1,10.0,0\n"
               "2,20.0,1\n"
               "1,11.0,1\n"  // duplicate time keeps file order after 10.0
               "0,0.0,0\n"
               "4,40.0,0\n");

    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"f0"};
    schema.label_column = "label";
    schema.standardize = false;

    const DomainDataset data =
        load_csv_domains(dir.file("shuffled.csv"), schema, 2, SplitMode::EqualCount);
    REQUIRE(data.domains.size() == 2);
    CHECK(data.domains[0].x(0, 0) == 0.0);
    CHECK(data.domains[0].x(1, 0) == 10.0);
    CHECK(data.domains[0].x(2, 0) == 11.0);
    CHECK(data.domains[1].x(0, 0) == 20.0);
    CHECK(data.domains[1].x(1, 0) == 30.0);
    CHECK(data.domains[1].x(2, 0) == 40.0);
}

TEST_CASE("load_csv_domains: strict time mode names the offending row") {
    TempDir dir;
    write_file(dir.file("bad.csv"),
               "t,f0,label\n"
               "0,0.0,0\n"
               "1,1.0,0\n"
               "1,2.0,1\n"
               "2,3.0,1\n");

    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"f0"};
    schema.label_column = "label";
    schema.strict_time = true;

    try {
        load_csv_domains(dir.file("bad.csv"), schema, 2, SplitMode::EqualCount);
        FAIL("expected IngestError");
    } catch (const IngestError& err) {
        // Data row 3 (1-based, excluding the header) repeats the time stamp.
        CHECK(std::string(err.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("load_csv_domains: missing column and malformed number are named") {
    TempDir dir;
    write_file(dir.file("nocol.csv"), "t,f0,label\n0,1.0,0\n");
    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"f0", "f9"};
    schema.label_column = "label";
    try {
        load_csv_domains(dir.file("nocol.csv"), schema, 2, SplitMode::EqualCount);
        FAIL("expected IngestError");
    } catch (const IngestError& err) {
        CHECK(std::string(err.what()).find("f9") != std::string::npos);
    }

    write_file(dir.file("badnum.csv"), "t,f0,label\n0,1.0,0\n1,oops,1\n");
    schema.feature_columns = {"f0"};
    try {
        load_csv_domains(dir.file("badnum.csv"), schema, 2, SplitMode::EqualCount);
        FAIL("expected IngestError");
    } catch (const IngestError& err) {
        const std::string what = err.what();
        CHECK(what.find("f0") != std::string::npos);
        CHECK(what.find("row 2") != std::string::npos);
    }

    CHECK_THROWS_AS(load_csv_domains(dir.file("does_not_exist.csv"), schema, 2,
                                     SplitMode::EqualCount),
                    IngestError);
}

TEST_CASE("load_csv_domains: time-range split can produce empty blocks") {
    TempDir dir;
    // All mass in the first tenth of the time span.
    std::string body = "t,f0,label\n";
    for (int i = 0; i < 9; ++i) {
        body += std::to_string(i) + ",1.0,0\n";
    }
    body += "100,1.0,1\n";
    write_file(dir.file("skewed.csv"), body);

    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"f0"};
    schema.label_column = "label";
    schema.standardize = false;

    CHECK_THROWS_AS(load_csv_domains(dir.file("skewed.csv"), schema, 5,
                                     SplitMode::TimeRange),
                    IngestError);
    // Two blocks: [0, 50) and [50, 100] keeps both nonempty.
    const DomainDataset data =
        load_csv_domains(dir.file("skewed.csv"), schema, 2, SplitMode::TimeRange);
    CHECK(data.domains[0].x.rows() == 9);
    CHECK(data.domains[1].x.rows() == 1);
}

TEST_CASE("load_csv_domains: standardization uses source-domain statistics") {
    TempDir dir;
    std::string body = "t,f0,y\n";
    // Sources (first two domains): f0 = 1..8. Target: f0 = 100.
    for (int i = 1; i <= 8; ++i) {
        body += std::to_string(i) + "," + std::to_string(double(i)) + "," +
                std::to_string(2.0 * i) + "\n";
    }
    body += "9,100.0,50.0\n";
    write_file(dir.file("reg.csv"), body);

    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"f0"};
    schema.label_column = "y";
    schema.label_kind = OutputKind::Regression;
    schema.standardize = true;

    const DomainDataset data =
        load_csv_domains(dir.file("reg.csv"), schema, 3, SplitMode::EqualCount);
    REQUIRE(data.domains.size() == 3);
    // Source rows 1..8 have mean 4.5; z-scores must average to zero exactly
    // over the sources while the target keeps its large offset.
    double acc = 0.0;
    for (int d = 0; d < 2; ++d) {
        acc += data.domains[static_cast<std::size_t>(d)].x.col(0).sum();
    }
    CHECK(std::abs(acc) < 1e-9);
    // The target's f0 = 100 outlier stays far out after source-only scaling.
    CHECK(data.domains[2].x(2, 0) > 10.0);
    // Regression labels are z-scored with source stats, recorded for readback.
    CHECK(data.label_std > 0.0);
    double label_acc = 0.0;
    for (int d = 0; d < 2; ++d) {
        label_acc += data.domains[static_cast<std::size_t>(d)].y.sum();
    }
    // Source labels are y = 2, 4, ..., 12 with mean 7.
    CHECK(std::abs(label_acc) < 1e-9);
    CHECK(data.label_mean == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("export_csv then load_csv_domains round trips the values") {
    TempDir dir;
    DomainDataset data = gen_rotated_moons(23, 3);
    data.name = "moons_rt";
    const std::vector<std::string> files = export_csv(data, dir.path.string());
    REQUIRE(files.size() == 3);
    CHECK(files[0].find("moons_rt_domain_00.csv") != std::string::npos);

    // Re-ingest one domain file; the exporter writes x0,x1,label columns and a
    // synthetic row index works as time.
    std::ifstream in(files[1]);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x0,x1,label");
    // Rewrite with an explicit time column for the loader.
    std::string body = "t," + header + "\n";
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        body += std::to_string(row++) + "," + line + "\n";
    }
    write_file(dir.file("reload.csv"), body);

    CsvSchema schema;
    schema.time_column = "t";
    schema.feature_columns = {"x0", "x1"};
    schema.label_column = "label";
    schema.standardize = false;

    const DomainDataset back =
        load_csv_domains(dir.file("reload.csv"), schema, 2, SplitMode::EqualCount);
    Matrix joined(back.domains[0].x.rows() + back.domains[1].x.rows(), 2);
    joined << back.domains[0].x, back.domains[1].x;
    Vector joined_y(joined.rows());
    joined_y << back.domains[0].y, back.domains[1].y;
    CHECK((joined - data.domains[1].x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((joined_y - data.domains[1].y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("DomainDataset::validate: rejects inconsistent shapes and labels") {
    DomainDataset data = gen_rotated_moons(29, 2);
    CHECK_NOTHROW(data.validate());

    DomainDataset bad_width = data;
    bad_width.domains[1].x = Matrix::Zero(5, 3);
    bad_width.domains[1].y = Vector::Zero(5);
    CHECK_THROWS_AS(bad_width.validate(), InvalidInputError);

    DomainDataset bad_count = data;
    bad_count.domains[0].y = Vector::Zero(7);
    CHECK_THROWS_AS(bad_count.validate(), InvalidInputError);

    DomainDataset bad_label = data;
    bad_label.domains[0].y(0) = 5.0;  // outside num_classes = 2
    CHECK_THROWS_AS(bad_label.validate(), InvalidInputError);

    DomainDataset empty;
    empty.name = "empty";
    CHECK_THROWS_AS(empty.validate(), InvalidInputError);
}
