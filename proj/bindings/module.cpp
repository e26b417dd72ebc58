#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "frekoo/base_model.hpp"
#include "frekoo/datasets.hpp"
#include "frekoo/eval.hpp"
#include "frekoo/koopman.hpp"
#include "frekoo/objective.hpp"
#include "frekoo/spectral.hpp"
#include "frekoo/trainer.hpp"

namespace py = pybind11;
using namespace frekoo;

PYBIND11_MODULE(frekoo, m) {
    m.doc() = "parameter-trajectory spectral decomposition and Koopman extrapolation";

    py::register_exception<InvalidInputError>(m, "InvalidInputError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IngestError>(m, "IngestError", PyExc_RuntimeError);
    py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError",
                                                  PyExc_RuntimeError);

    // ---- spectral ----
    py::class_<FrequencyMask>(m, "FrequencyMask")
        .def_readonly("selected", &FrequencyMask::selected)
        .def_readonly("q", &FrequencyMask::q)
        .def_readonly("tau", &FrequencyMask::tau)
        .def_readonly("n_freq", &FrequencyMask::n_freq)
        .def("contains", &FrequencyMask::contains);

    m.def("num_frequencies", &num_frequencies, py::arg("t"));
    m.def(
        "dft",
        [](const Matrix& trajectory) { return dft_forward(trajectory).coeffs; },
        py::arg("trajectory"),
        "Unnormalized half-spectrum, one column per parameter dimension.");
    m.def(
        "magnitudes",
        [](const Matrix& trajectory) {
            return spectral_magnitudes(dft_forward(trajectory));
        },
        py::arg("trajectory"),
        "Per-frequency mean coefficient magnitude of the trajectory.");
    m.def("select_top", &select_top_frequencies, py::arg("magnitudes"),
          py::arg("tau"));
    m.def(
        "decompose",
        [](const Matrix& trajectory, double tau) {
            Decomposition d = decompose(trajectory, tau);
            return py::make_tuple(d.low, d.high);
        },
        py::arg("trajectory"), py::arg("tau"),
        "Split a T x D trajectory into (low, high) frequency bands.");
    m.def("band_projector", &band_projector, py::arg("t"), py::arg("mask"),
          py::arg("keep_selected"));

    // ---- koopman ----
    py::class_<StabilityReport::Row>(m, "StabilityRow")
        .def_readonly("horizon", &StabilityReport::Row::horizon)
        .def_readonly("measured", &StabilityReport::Row::measured)
        .def_readonly("bound", &StabilityReport::Row::bound);

    py::class_<StabilityReport>(m, "StabilityReport")
        .def_readonly("rho", &StabilityReport::rho)
        .def_readonly("cond_v", &StabilityReport::cond_v)
        .def_readonly("diagonalizable", &StabilityReport::diagonalizable)
        .def_readonly("q", &StabilityReport::q)
        .def_readonly("rows", &StabilityReport::rows)
        .def_readonly("violation", &StabilityReport::violation);

    m.def("spectral_radius", &spectral_radius, py::arg("k"));
    m.def("stability_check", &stability_bound_check, py::arg("k"),
          py::arg("e0"), py::arg("h_max"), py::arg("slack") = 1e-8,
          py::arg("cond_threshold") = 1e8);

    // ---- objective ----
    py::class_<LossBreakdown>(m, "LossBreakdown")
        .def_readonly("task", &LossBreakdown::task)
        .def_readonly("rec", &LossBreakdown::rec)
        .def_readonly("koop", &LossBreakdown::koop)
        .def_readonly("reg_high", &LossBreakdown::reg_high)
        .def_readonly("total", &LossBreakdown::total);

    py::class_<MapEquivalence>(m, "MapEquivalence")
        .def_readonly("r_high", &MapEquivalence::r_high)
        .def_readonly("neg_log_prior", &MapEquivalence::neg_log_prior)
        .def_readonly("constant_gap", &MapEquivalence::constant_gap);

    m.def("loss_koop", &loss_koop, py::arg("z_low_seq"),
          py::arg("z_low_pred_seq"));
    m.def("loss_rec", &loss_rec, py::arg("theta_seq"),
          py::arg("theta_pred_seq"));
    m.def("reg_high", &reg_high, py::arg("z_high_seq"));
    m.def("total_loss", &total_loss, py::arg("task"), py::arg("rec"),
          py::arg("koop"), py::arg("reg"), py::arg("alpha"), py::arg("beta"),
          py::arg("gamma"));
    m.def("map_equivalence", &map_equivalence_check, py::arg("z_high_seq"),
          py::arg("sigma"));

    // ---- data ----
    py::enum_<OutputKind>(m, "OutputKind")
        .value("Classification", OutputKind::Classification)
        .value("Regression", OutputKind::Regression);

    py::class_<Domain>(m, "Domain")
        .def(py::init([](Matrix x, Vector y) {
                 return Domain{std::move(x), std::move(y)};
             }),
             py::arg("x"), py::arg("y"))
        .def_readonly("x", &Domain::x)
        .def_readonly("y", &Domain::y);

    py::class_<DomainDataset>(m, "DomainDataset")
        .def_readonly("name", &DomainDataset::name)
        .def_readonly("label_kind", &DomainDataset::label_kind)
        .def_readonly("num_classes", &DomainDataset::num_classes)
        .def_readonly("domains", &DomainDataset::domains)
        .def_readonly("label_mean", &DomainDataset::label_mean)
        .def_readonly("label_std", &DomainDataset::label_std)
        .def("feature_dim", &DomainDataset::feature_dim)
        .def("total_samples", &DomainDataset::total_samples);

    m.def("rotated_moons", &gen_rotated_moons, py::arg("seed"),
          py::arg("n_domains") = 10, py::arg("degrees_per_domain") = 18.0,
          py::arg("per_class") = 90, py::arg("noise_std") = 0.1);
    m.def("periodic_moons", &gen_periodic_moons, py::arg("seed"));

    // ---- training ----
    py::class_<TaskHead>(m, "TaskHead")
        .def(py::init([](std::vector<Index> widths, OutputKind output) {
                 TaskHead head;
                 head.widths = std::move(widths);
                 head.output = output;
                 return head;
             }),
             py::arg("widths"), py::arg("output") = OutputKind::Classification)
        .def_readonly("widths", &TaskHead::widths)
        .def_readonly("output", &TaskHead::output)
        .def("param_dim", &TaskHead::param_dim);

    py::class_<FlatParams>(m, "FlatParams")
        .def_property_readonly(
            "values", [](const FlatParams& p) { return p.values; });

    m.def(
        "flat_params",
        [](const TaskHead& head, const Vector& values) {
            require(values.size() == head.param_dim(),
                    "flat_params: values length must match head.param_dim()");
            FlatParams p;
            p.values = values;
            p.layout = head.layout();
            return p;
        },
        py::arg("head"), py::arg("values"),
        "Wrap a flat parameter vector in the head's tensor layout.");

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("head", &TrainConfig::head)
        .def_readwrite("tau", &TrainConfig::tau)
        .def_readwrite("alpha", &TrainConfig::alpha)
        .def_readwrite("beta", &TrainConfig::beta)
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("lr_pre", &TrainConfig::lr_pre)
        .def_readwrite("lr_co", &TrainConfig::lr_co)
        .def_readwrite("lr_ko", &TrainConfig::lr_ko)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("latent_dim", &TrainConfig::latent_dim)
        .def_readwrite("enc_hidden", &TrainConfig::enc_hidden)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("warm_epochs_first", &TrainConfig::warm_epochs_first)
        .def_readwrite("warm_epochs_next", &TrainConfig::warm_epochs_next)
        .def_readwrite("lr_warm", &TrainConfig::lr_warm)
        .def_readwrite("warm_weight_decay", &TrainConfig::warm_weight_decay)
        .def_readwrite("fix_op_identity", &TrainConfig::fix_op_identity)
        .def_readwrite("bypass_decomposition",
                       &TrainConfig::bypass_decomposition)
        .def_readwrite("retrain_bank_each_epoch",
                       &TrainConfig::retrain_bank_each_epoch)
        .def_readwrite("bank_refresh_epochs",
                       &TrainConfig::bank_refresh_epochs)
        .def_readwrite("op_init_scale", &TrainConfig::op_init_scale)
        .def("validate", &TrainConfig::validate);

    py::class_<KoopmanState>(m, "KoopmanState")
        .def_property_readonly("op",
                               [](const KoopmanState& s) { return s.op; })
        .def("encode_low", &KoopmanState::encode_low, py::arg("theta"))
        .def("encode_high", &KoopmanState::encode_high, py::arg("theta"))
        .def("decode", &KoopmanState::decode, py::arg("z"))
        .def("koopman_step", &KoopmanState::koopman_step, py::arg("z"))
        .def("predict_next_param", &KoopmanState::predict_next_param,
             py::arg("theta_low"), py::arg("theta_high"));

    py::class_<TrainOutcome>(m, "TrainOutcome")
        .def_property_readonly(
            "bank", [](const TrainOutcome& o) { return o.bank.stack(); })
        .def_readonly("koopman", &TrainOutcome::koopman)
        .def_readonly("theta_next", &TrainOutcome::theta_next)
        .def_readonly("log", &TrainOutcome::log)
        .def_readonly("final_mask", &TrainOutcome::final_mask);

    m.def(
        "train",
        [](const std::vector<Domain>& domains, const TrainConfig& config) {
            return train_frekoo(domains, config);
        },
        py::arg("domains"), py::arg("config"),
        "Warm-start the parameter bank, run joint training, extrapolate.");

    m.def("evaluate", &evaluate, py::arg("head"), py::arg("theta"),
          py::arg("domain"), py::arg("kind"), py::arg("label_std") = 1.0,
          "Misclassification percent or MAE of theta on a domain.");
}
