#include "frekoo/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

namespace frekoo {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'E', 'K', 'O', 'O', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_tensor(std::ostream& out, const std::string& name,
                  const Eigen::Ref<const Matrix>& value) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<std::uint64_t>(value.rows()));
    write_u64(out, static_cast<std::uint64_t>(value.cols()));
    // Column-major, matching Eigen's storage, so the bytes round-trip as is.
    const Matrix dense = value;
    out.write(reinterpret_cast<const char*>(dense.data()),
              static_cast<std::streamsize>(sizeof(double) * dense.size()));
}

struct TensorFile {
    std::map<std::string, Matrix> tensors;

    const Matrix& get(const std::string& name) const {
        const auto it = tensors.find(name);
        if (it == tensors.end()) {
            throw IngestError("checkpoint is missing tensor '" + name + "'");
        }
        return it->second;
    }
};

void append_mlp(std::vector<std::pair<std::string, Matrix>>& out,
                const std::string& prefix, const Mlp& net) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const std::string idx = std::to_string(i);
        out.emplace_back(prefix + ".w" + idx, net.layers[i].w);
        out.emplace_back(prefix + ".b" + idx, Matrix(net.layers[i].b));
    }
}

Mlp read_mlp(const TensorFile& file, const std::string& prefix,
             Activation act) {
    Mlp net;
    net.hidden_act = act;
    for (std::size_t i = 0;; ++i) {
        const std::string idx = std::to_string(i);
        const auto it = file.tensors.find(prefix + ".w" + idx);
        if (it == file.tensors.end()) {
            break;
        }
        Mlp::Layer layer;
        layer.w = it->second;
        layer.b = file.get(prefix + ".b" + idx).col(0);
        net.layers.push_back(std::move(layer));
    }
    if (net.layers.empty()) {
        throw IngestError("checkpoint has no layers under '" + prefix + "'");
    }
    return net;
}

}  // namespace

std::uint64_t config_hash(const TrainConfig& config) {
    return fnv1a64(config.canonical_string());
}

void save_checkpoint(const TrainOutcome& outcome, const TrainConfig& config,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IngestError("cannot write '" + path + "'");
    }

    std::vector<std::pair<std::string, Matrix>> tensors;
    tensors.emplace_back("bank", outcome.bank.stack());
    append_mlp(tensors, "enc_low", outcome.koopman.enc_low);
    append_mlp(tensors, "enc_high", outcome.koopman.enc_high);
    append_mlp(tensors, "dec", outcome.koopman.dec);
    tensors.emplace_back("op", outcome.koopman.op);
    tensors.emplace_back("theta_next", Matrix(outcome.theta_next.values));

    Matrix mask_meta(3, 1);
    mask_meta(0, 0) = static_cast<double>(outcome.final_mask.n_freq);
    mask_meta(1, 0) = static_cast<double>(outcome.final_mask.q);
    mask_meta(2, 0) = outcome.final_mask.tau;
    tensors.emplace_back("mask_meta", mask_meta);
    Matrix mask_sel(std::max<std::size_t>(outcome.final_mask.selected.size(), 1), 1);
    mask_sel.setConstant(-1.0);
    for (std::size_t i = 0; i < outcome.final_mask.selected.size(); ++i) {
        mask_sel(static_cast<Index>(i), 0) =
            static_cast<double>(outcome.final_mask.selected[i]);
    }
    tensors.emplace_back("mask_selected", mask_sel);

    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    write_u64(out, config_hash(config));
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, value] : tensors) {
        write_tensor(out, name, value);
    }
    if (!out) {
        throw IngestError("write to '" + path + "' failed");
    }
}

TrainOutcome load_checkpoint(const std::string& path,
                             const TrainConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open '" + path + "'");
    }
    char magic[sizeof(kMagic)] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IngestError("'" + path + "' is not a checkpoint file");
    }
    const std::uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw IngestError("checkpoint version " + std::to_string(version) +
                          " is not supported");
    }
    const std::uint64_t stored_hash = read_u64(in);
    if (stored_hash != config_hash(config)) {
        throw ConfigError(
            "checkpoint was written under a different configuration");
    }

    TensorFile file;
    const std::uint32_t count = read_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint64_t rows = read_u64(in);
        const std::uint64_t cols = read_u64(in);
        Matrix value(static_cast<Index>(rows), static_cast<Index>(cols));
        in.read(reinterpret_cast<char*>(value.data()),
                static_cast<std::streamsize>(sizeof(double) * rows * cols));
        if (!in) {
            throw IngestError("'" + path + "' ended mid-tensor ('" + name + "')");
        }
        file.tensors.emplace(std::move(name), std::move(value));
    }

    TrainOutcome outcome;
    const Matrix& bank_rows = file.get("bank");
    const Layout layout = config.head.layout();
    require(bank_rows.cols() == layout.total_size(),
            "checkpoint bank width does not match the configured head");
    for (Index t = 0; t < bank_rows.rows(); ++t) {
        FlatParams theta;
        theta.layout = layout;
        theta.values = bank_rows.row(t).transpose();
        outcome.bank.thetas.push_back(std::move(theta));
    }

    outcome.koopman.enc_low = read_mlp(file, "enc_low", Activation::Tanh);
    outcome.koopman.enc_high = read_mlp(file, "enc_high", Activation::Tanh);
    outcome.koopman.dec = read_mlp(file, "dec", Activation::Tanh);
    outcome.koopman.op = file.get("op");
    outcome.koopman.latent_dim = outcome.koopman.op.rows();
    outcome.koopman.param_dim = outcome.koopman.enc_low.in_dim();

    outcome.theta_next.layout = layout;
    outcome.theta_next.values = file.get("theta_next").col(0);

    const Matrix& mask_meta = file.get("mask_meta");
    outcome.final_mask.n_freq = static_cast<Index>(mask_meta(0, 0));
    outcome.final_mask.q = static_cast<Index>(mask_meta(1, 0));
    outcome.final_mask.tau = mask_meta(2, 0);
    const Matrix& mask_sel = file.get("mask_selected");
    for (Index i = 0; i < mask_sel.rows(); ++i) {
        if (mask_sel(i, 0) >= 0.0) {
            outcome.final_mask.selected.push_back(
                static_cast<Index>(mask_sel(i, 0)));
        }
    }
    return outcome;
}

}  // namespace frekoo
