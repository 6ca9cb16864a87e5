#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tcf/io.hpp"

namespace py = pybind11;
using namespace tcf;

namespace {

using PointRows = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

CorrespondenceSet to_correspondences(const PointRows& src, const PointRows& dst) {
  if (src.rows() != dst.rows()) {
    throw Error(ErrorCode::InvalidArgument, "source and target arrays need the same number of rows");
  }
  CorrespondenceSet out(static_cast<std::size_t>(src.rows()));
  for (Eigen::Index i = 0; i < src.rows(); ++i) {
    out[i].p = src.row(i).transpose();
    out[i].q = dst.row(i).transpose();
  }
  return out;
}

py::dict consensus_dict(const ConsensusResult& r) {
  py::dict d;
  d["stage"] = std::string(to_string(r.stage));
  d["indices"] = r.indices;
  d["iterations"] = r.iterations_run;
  return d;
}

TcfParams make_params(double tau, double lambda, std::uint64_t i1, std::uint64_t i2, std::uint64_t i3,
                      std::uint64_t seed, bool adaptive) {
  TcfParams p;
  p.tau = tau;
  p.lambda = lambda;
  p.max_iters_1pt = i1;
  p.max_iters_2pt = i2;
  p.max_iters_3pt = i3;
  p.seed = seed;
  p.adaptive = adaptive;
  return p;
}

py::object json_loads(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(io::dump(j));
}

nlohmann::json json_dumps(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cascaded one-, two- and three-point RANSAC with scale-adaptive Cauchy IRLS.";

  static py::exception<Error> tcf_error(m, "TcfError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = tcf_error;
      py::object instance = err(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(tcf_error.ptr(), instance.ptr());
    }
  });

  py::class_<RigidTransform>(m, "RigidTransform")
      .def(py::init<>())
      .def(py::init([](const Matrix3& r, const Point3& t) { return RigidTransform(r, t); }),
           py::arg("rotation"), py::arg("translation"))
      .def_static("from_matrix", [](const Matrix4& mat) { return RigidTransform::from_matrix(mat); },
                  py::arg("matrix"))
      .def_property_readonly("rotation", &RigidTransform::rotation)
      .def_property_readonly("translation", &RigidTransform::translation)
      .def("matrix", &RigidTransform::matrix)
      .def("inverse", &RigidTransform::inverse)
      .def("apply",
           [](const RigidTransform& t, const PointRows& pts) {
             PointRows out(pts.rows(), 3);
             for (Eigen::Index i = 0; i < pts.rows(); ++i) out.row(i) = t.apply(pts.row(i).transpose()).transpose();
             return out;
           },
           py::arg("points"), "Transforms an (n, 3) array of points.")
      .def("__mul__", [](const RigidTransform& a, const RigidTransform& b) { return a * b; })
      .def("__repr__", [](const RigidTransform& t) {
        return "RigidTransform(translation=[" + io::format_double(t.translation().x()) + ", " +
               io::format_double(t.translation().y()) + ", " + io::format_double(t.translation().z()) + "])";
      });

  m.def("estimate_pose_svd",
        [](const PointRows& src, const PointRows& dst, std::optional<std::vector<double>> weights) {
          const auto c = to_correspondences(src, dst);
          return weights ? estimate_pose_svd(c, *weights) : estimate_pose_svd(c);
        },
        py::arg("source"), py::arg("target"), py::arg("weights") = py::none(),
        "Weighted least-squares rigid alignment of source rows onto target rows.");

  m.def("pose_errors",
        [](const RigidTransform& est, const RigidTransform& gt) {
          const PoseErrors e = pose_errors(est, gt);
          return py::make_tuple(e.rotation_deg, e.translation);
        },
        py::arg("estimate"), py::arg("truth"), "Rotation error in degrees and translation error.");

  m.def("required_iterations",
        [](double lambda, double fraction, unsigned s, std::optional<std::uint64_t> cap) {
          return required_iterations(lambda, fraction, s, cap.value_or(kUnboundedIterations));
        },
        py::arg("confidence"), py::arg("inlier_fraction"), py::arg("sample_size"),
        py::arg("cap") = py::none());

  m.def("register",
        [](const PointRows& src, const PointRows& dst, double tau, double lambda, std::uint64_t i1,
           std::uint64_t i2, std::uint64_t i3, std::uint64_t seed, double mu, double e_min,
           double gamma_min, std::size_t irls_max_iters) {
          const auto c = to_correspondences(src, dst);
          IrlsParams irls{mu, e_min, gamma_min, irls_max_iters};
          RegistrationOutput out;
          {
            py::gil_scoped_release release;
            out = tcf_register(c, make_params(tau, lambda, i1, i2, i3, seed, true), irls);
          }
          py::dict d;
          d["pose"] = out.pose;
          d["coarse_pose"] = out.coarse_pose;
          d["input_size"] = out.input_size;
          py::list stages;
          for (const auto& s : out.stages) stages.append(consensus_dict(s));
          d["stages"] = stages;
          d["irls_iterations"] = out.irls_iterations;
          d["irls_stop"] = std::string(to_string(out.irls_stop));
          py::dict timings;
          timings["one_point"] = out.timings.one_point_ms;
          timings["two_point"] = out.timings.two_point_ms;
          timings["three_point"] = out.timings.three_point_ms;
          timings["irls"] = out.timings.irls_ms;
          d["timings_ms"] = timings;
          return d;
        },
        py::arg("source"), py::arg("target"), py::arg("tau") = 0.3, py::arg("confidence") = 0.99,
        py::arg("max_iters_1pt") = 10000, py::arg("max_iters_2pt") = 10000,
        py::arg("max_iters_3pt") = 10000, py::arg("seed") = 0, py::arg("irls_mu") = 1.3,
        py::arg("irls_e_min") = 0.01, py::arg("irls_gamma_min") = 1.0, py::arg("irls_max_iters") = 100,
        "Full cascade followed by IRLS refinement. Returns a dict with the pose and stage results.");

  m.def("one_point_ransac",
        [](const PointRows& src, const PointRows& dst, double tau, double lambda, std::uint64_t cap,
           std::uint64_t seed, bool adaptive) {
          Rng rng(seed);
          return consensus_dict(
              one_point_ransac(to_correspondences(src, dst), make_params(tau, lambda, cap, 1, 1, seed, adaptive), rng));
        },
        py::arg("source"), py::arg("target"), py::arg("tau"), py::arg("confidence") = 0.99,
        py::arg("cap") = 10000, py::arg("seed") = 0, py::arg("adaptive") = true);

  m.def("two_point_ransac",
        [](const PointRows& src, const PointRows& dst, double tau, double lambda, std::uint64_t cap,
           std::uint64_t seed, bool adaptive) {
          Rng rng(seed);
          return consensus_dict(
              two_point_ransac(to_correspondences(src, dst), make_params(tau, lambda, 1, cap, 1, seed, adaptive), rng));
        },
        py::arg("source"), py::arg("target"), py::arg("tau"), py::arg("confidence") = 0.99,
        py::arg("cap") = 10000, py::arg("seed") = 0, py::arg("adaptive") = true);

  m.def("three_point_ransac",
        [](const PointRows& src, const PointRows& dst, double tau, double lambda, std::uint64_t cap,
           std::uint64_t seed, bool adaptive) {
          Rng rng(seed);
          const PoseConsensus pc = three_point_ransac(
              to_correspondences(src, dst), make_params(tau, lambda, 1, 1, cap, seed, adaptive), rng);
          return py::make_tuple(pc.pose, consensus_dict(pc.consensus));
        },
        py::arg("source"), py::arg("target"), py::arg("tau"), py::arg("confidence") = 0.99,
        py::arg("cap") = 10000, py::arg("seed") = 0, py::arg("adaptive") = true);

  m.def("vanilla_ransac",
        [](const PointRows& src, const PointRows& dst, std::uint64_t iterations, double tau,
           std::uint64_t seed) {
          Rng rng(seed);
          const PoseConsensus pc = vanilla_ransac(to_correspondences(src, dst), iterations, tau, rng);
          return py::make_tuple(pc.pose, pc.consensus.indices);
        },
        py::arg("source"), py::arg("target"), py::arg("iterations"), py::arg("tau"), py::arg("seed") = 0);

  m.def("sa_cauchy_irls",
        [](const PointRows& src, const PointRows& dst, double mu, double e_min, double gamma_min,
           std::size_t max_iters) {
          const IrlsResult r = sa_cauchy_irls(to_correspondences(src, dst), {mu, e_min, gamma_min, max_iters});
          return py::make_tuple(r.pose, r.iterations, std::string(to_string(r.stop)));
        },
        py::arg("source"), py::arg("target"), py::arg("mu") = 1.3, py::arg("e_min") = 0.01,
        py::arg("gamma_min") = 1.0, py::arg("max_iters") = 100);

  m.def("generate_scene",
        [](std::size_t n, double extent, double outlier_ratio, double sigma, std::uint64_t seed) {
          const SyntheticScene s = generate_scene({n, extent, outlier_ratio, sigma, seed});
          PointRows src(static_cast<Eigen::Index>(n), 3), dst(static_cast<Eigen::Index>(n), 3);
          py::array_t<bool> mask(static_cast<py::ssize_t>(n));
          auto mv = mask.mutable_unchecked<1>();
          for (std::size_t i = 0; i < n; ++i) {
            src.row(i) = s.correspondences[i].p.transpose();
            dst.row(i) = s.correspondences[i].q.transpose();
            mv(i) = s.inlier_mask[i];
          }
          return py::make_tuple(src, dst, mask, s.gt_pose);
        },
        py::arg("n") = 3000, py::arg("extent") = 100.0, py::arg("outlier_ratio") = 0.0,
        py::arg("sigma") = 0.1, py::arg("seed") = 0,
        "Returns (source, target, inlier_mask, gt_pose).");

  m.def("run_study",
        [](const std::string& kind, const py::object& config) {
          const StudyConfig c = io::study_config_from_json(study_kind_from_string(kind), json_dumps(config));
          StudyReport report;
          {
            py::gil_scoped_release release;
            report = run_study(c);
          }
          return json_loads(io::to_json(report));
        },
        py::arg("kind"), py::arg("config") = py::dict(),
        "Runs a noise, iteration or ablation study; config keys mirror the CLI config file.");
}
