#include "ttb/augmentation.hpp"
#include "ttb/data.hpp"
#include "ttb/errors.hpp"
#include "ttb/image_io.hpp"
#include "ttb/tt_init.hpp"
#include "ttb/vi_engine.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ttb;

namespace {

using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;
using FMask = py::array_t<bool, py::array::f_style | py::array::forcecast>;

Dims shape_of(const py::array& a) {
    Dims d(static_cast<std::size_t>(a.ndim()));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::size_t>(a.shape(static_cast<py::ssize_t>(i)));
    return d;
}

DenseTensor to_tensor(const FArray& a) {
    const double* p = a.data();
    return DenseTensor(shape_of(a), std::vector<double>(p, p + a.size()));
}

MaskTensor to_mask(const FMask& a) {
    const bool* p = a.data();
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(a.size()));
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = p[i] ? 1 : 0;
    return MaskTensor(shape_of(a), std::move(bits));
}

std::vector<py::ssize_t> f_strides(const Dims& dims, std::size_t item) {
    std::vector<py::ssize_t> s(dims.size());
    py::ssize_t step = static_cast<py::ssize_t>(item);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        s[i] = step;
        step *= static_cast<py::ssize_t>(dims[i]);
    }
    return s;
}

py::array_t<double> to_array(const DenseTensor& t) {
    const std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
    return py::array_t<double>(shape, f_strides(t.dims(), sizeof(double)), t.data().data());
}

py::array_t<bool> to_array(const MaskTensor& m) {
    const std::vector<py::ssize_t> shape(m.dims().begin(), m.dims().end());
    py::array_t<bool> out(shape, f_strides(m.dims(), sizeof(bool)));
    bool* p = out.mutable_data();
    for (std::size_t i = 0; i < m.size(); ++i) p[i] = m.observed(i);
    return out;
}

py::array_t<double> core_to_array(const CoreArray& c) {
    return to_array(DenseTensor({c.rows(), c.cols(), c.depth()}, std::vector<double>(c.data().begin(), c.data().end())));
}

TTCores to_cores(const std::vector<FArray>& list) {
    TTCores tt;
    for (const auto& a : list) {
        if (a.ndim() != 3) throw ShapeError("cores must be 3-d arrays (L_d, L_d+1, J_d)");
        const Dims d = shape_of(a);
        CoreArray c(d[0], d[1], d[2]);
        std::copy(a.data(), a.data() + a.size(), c.data().begin());
        tt.cores.push_back(std::move(c));
    }
    return tt;
}

py::list cores_to_list(const std::vector<CoreArray>& cores) {
    py::list out;
    for (const auto& c : cores) out.append(core_to_array(c));
    return out;
}

py::tuple run_fit(const FArray& a, const std::optional<FMask>& mask, std::size_t max_iters, double rel_tol,
                  double prune_ratio, double fast_path_fraction, std::uint64_t seed, std::size_t rank_cap,
                  std::optional<double> svd_tol, std::optional<double> init_variance, std::size_t threads) {
    const DenseTensor t = to_tensor(a);
    const MaskTensor o = mask ? to_mask(*mask) : MaskTensor(t.dims(), true);
    FitOptions opts;
    opts.max_iters = max_iters;
    opts.rel_tol = rel_tol;
    opts.prune_ratio = prune_ratio;
    opts.fast_path_observed_fraction = fast_path_fraction;
    opts.seed = seed;
    opts.rank_cap_multiplier = rank_cap;
    opts.svd_rel_tol = svd_tol;
    opts.relative_init_variance = init_variance;
    opts.threads = threads;
    FitResult r;
    DenseTensor yhat;
    {
        py::gil_scoped_release release;
        r = fit(t, o, {}, opts);
        yhat = reconstruct(r.state);
    }
    py::list means, vars;
    for (const auto& c : r.state.cores) {
        means.append(core_to_array(c.mean));
        vars.append(core_to_array(c.var));
    }
    return py::make_tuple(to_array(yhat), fit_report_json(r.report), r.state.ranks, means, vars);
}

}  // namespace

PYBIND11_MODULE(_ttb, m) {
    m.doc() = "Bayesian tensor-train completion core";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);

    m.def("fit", &run_fit, py::arg("a"), py::arg("mask") = py::none(), py::arg("max_iters") = 100,
          py::arg("rel_tol") = 1e-6, py::arg("prune_ratio") = 100.0, py::arg("fast_path_fraction") = 0.9,
          py::arg("seed") = 0, py::arg("rank_cap") = 15, py::arg("svd_tol") = py::none(),
          py::arg("init_variance") = py::none(), py::arg("threads") = 1);

    m.def("tt_contract", [](const std::vector<FArray>& cores) { return to_array(tt_contract(to_cores(cores))); });
    m.def("tt_svd", [](const FArray& a, const std::vector<std::size_t>& ranks) {
        return cores_to_list(tt_svd(to_tensor(a), ranks).cores);
    });
    m.def("max_ranks", [](const FArray& a, std::size_t rank_cap) {
        InitConfig cfg;
        cfg.rank_cap_multiplier = rank_cap;
        return max_ranks(to_tensor(a), cfg);
    }, py::arg("a"), py::arg("rank_cap") = 15);

    m.def("gen_synthetic", [](const Dims& dims, const std::vector<std::size_t>& ranks, std::uint64_t seed) {
        const Synthetic s = gen_synthetic({dims, ranks, seed});
        return py::make_tuple(to_array(s.truth), cores_to_list(s.cores.cores));
    });
    m.def("add_noise", [](const FArray& a, double snr, std::uint64_t seed) {
        const NoisyTensor n = add_noise(to_tensor(a), snr, seed);
        return py::make_tuple(to_array(n.noisy), n.realized_snr_db);
    });
    m.def("add_noise_variance", [](const FArray& a, double var, std::uint64_t seed) {
        return to_array(add_noise_variance(to_tensor(a), var, seed).noisy);
    });
    m.def("random_mask", [](const Dims& dims, double missing, std::uint64_t seed) {
        return to_array(random_mask(dims, missing, seed));
    });

    m.def("rse", [](const FArray& t, const FArray& e) { return rse(to_tensor(t), to_tensor(e)); });
    m.def("psnr", [](const FArray& t, const FArray& e) { return psnr(to_tensor(t), to_tensor(e)); });
    m.def("ssim", [](const FArray& t, const FArray& e) { return ssim(to_tensor(t), to_tensor(e)); });
    m.def("metrics_json", [](const FArray& t, const FArray& e) {
        return metrics_json(compute_metrics(to_tensor(t), to_tensor(e)));
    });

    m.def("augment", [](const FArray& img, const std::string& plan) {
        return to_array(augment(to_tensor(img), plan_from_json(plan)));
    });
    m.def("augment_mask", [](const FMask& mask, const std::string& plan) {
        return to_array(augment_mask(to_mask(mask), plan_from_json(plan)));
    });
    m.def("deaugment", [](const FArray& t, const std::string& plan) {
        return to_array(deaugment(to_tensor(t), plan_from_json(plan)));
    });
    m.def("make_plan", [](const std::vector<std::pair<std::size_t, std::size_t>>& factors, const std::string& mode,
                          std::size_t channels) {
        return plan_to_json(make_plan(factors, parse_augment_mode(mode), channels));
    }, py::arg("factors"), py::arg("mode") = "basic", py::arg("channels") = 1);

    m.def("read_image", [](const std::string& path) { return to_array(read_image(path)); });
    m.def("write_image", [](const std::string& path, const FArray& img) { write_image(path, to_tensor(img)); });
}
