#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "beltpick/declutter.hpp"
#include "beltpick/eval.hpp"
#include "beltpick/store.hpp"

namespace py = pybind11;
using namespace beltpick;

namespace {

py::array_t<double> depth_array(const DepthMap& d) {
  py::array_t<double> out({d.height(), d.width()});
  std::copy(d.data().begin(), d.data().end(), out.mutable_data());
  return out;
}

py::array_t<double> grid_array(const GridSpec& g, const std::vector<double>& v) {
  py::array_t<double> out({g.dims[2], g.dims[1], g.dims[0]});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// Window of `timesteps` stereo captures, the scene at lag 0 being `scene`.
CaptureWindow capture_window(const Scene& scene, int timesteps, const NoiseSpec& noise, int seal_stride) {
  const BeltConfig belt;
  const auto rig = default_stereo_rig();
  std::vector<StereoCapture> history;
  for (int t = 0; t < timesteps; ++t) {
    const Scene at = scene_at_time(scene, belt, -(timesteps - 1 - t) * belt.timestep);
    StereoCapture c;
    c.timestep_index = t;
    c.timestamp = t * belt.timestep;
    for (int cam = 0; cam < 2; ++cam)
      c.cameras[cam] =
          capture_view(at, CameraIntrinsics{}, rig[cam], t, cam, c.timestamp, noise, SuctionCupSpec{}, seal_stride);
    history.push_back(std::move(c));
  }
  return assemble_window(history, timesteps, belt);
}

py::dict pose_dict(const SuctionPoseResult& p) {
  py::dict d;
  d["point"] = p.point;
  d["direction"] = p.direction;
  d["seal"] = p.seal;
  d["wrench"] = p.wrench;
  d["collision"] = p.collision;
  d["overall"] = p.overall;
  d["instance_id"] = p.instance_id;
  return d;
}

}  // namespace

PYBIND11_MODULE(_beltpick, m) {
  static py::exception<Error> error(m, "BeltpickError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error.ptr())(e.what());
      exc.attr("code") = std::string(errc_name(e.code()));
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<>())
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height);

  py::class_<RigidPose>(m, "RigidPose")
      .def(py::init<>())
      .def(py::init([](const Mat3& r, const Vec3& c) {
             RigidPose p{r, c};
             p.validate();
             return p;
           }),
           py::arg("rotation"), py::arg("center"))
      .def_readwrite("rotation", &RigidPose::rotation)
      .def_readwrite("center", &RigidPose::center)
      .def_static("look_at", &RigidPose::look_at, py::arg("eye"), py::arg("target"), py::arg("up") = Vec3::UnitZ());

  m.def("default_stereo_rig", [] {
    const auto rig = default_stereo_rig();
    return std::vector<RigidPose>(rig.begin(), rig.end());
  });
  m.def(
      "project",
      [](const CameraIntrinsics& intr, const RigidPose& pose, const Vec3& p) {
        const Projection pr = project(intr, pose, p);
        return py::make_tuple(pr.pixel, pr.depth);
      },
      py::arg("intrinsics"), py::arg("pose"), py::arg("point"));
  m.def("backproject", &backproject, py::arg("intrinsics"), py::arg("pose"), py::arg("pixel"), py::arg("depth"));

  m.def("compose_score", &compose_score, py::arg("seal"), py::arg("wrench"), py::arg("collision"));
  m.def("ap_from_scores", &ap_from_scores, py::arg("scores"), py::arg("k"));

  py::class_<Scene>(m, "Scene")
      .def("__len__", [](const Scene& s) { return s.objects().size(); })
      .def("translated", &Scene::translated, py::arg("offset"))
      .def("instances", [](const Scene& s) {
        py::list out;
        for (const auto& inst : s.instances()) {
          py::dict d;
          d["asset"] = inst.asset_id;
          d["instance_id"] = inst.instance_id;
          d["rotation"] = inst.pose.rotation;
          d["center"] = inst.pose.center;
          out.append(d);
        }
        return out;
      });

  m.def(
      "generate_scene",
      [](std::uint64_t seed, int count_min, int count_max) {
        RandomizationSpec spec;
        spec.count_min = count_min;
        spec.count_max = count_max;
        return generate_scene(spec, builtin_assets(), seed);
      },
      py::arg("seed"), py::arg("count_min") = 3, py::arg("count_max") = 5);

  m.def(
      "render_depth",
      [](const Scene& scene, const RigidPose& pose, const CameraIntrinsics& intr) {
        return depth_array(render_depth(scene, intr, pose));
      },
      py::arg("scene"), py::arg("pose"), py::arg("intrinsics") = CameraIntrinsics{});

  py::class_<CaptureWindow>(m, "CaptureWindow").def("__len__", [](const CaptureWindow& w) { return w.views.size(); });
  m.def(
      "capture_window",
      [](const Scene& scene, int timesteps, double noise_sigma, std::uint64_t seed, int seal_stride) {
        NoiseSpec noise;
        noise.sigma = noise_sigma;
        noise.seed = seed;
        py::gil_scoped_release release;
        return capture_window(scene, timesteps, noise, seal_stride);
      },
      py::arg("scene"), py::arg("timesteps") = 5, py::arg("noise_sigma") = 0.0, py::arg("seed") = 0,
      py::arg("seal_stride") = 4);

  m.def(
      "fuse",
      [](const CaptureWindow& window) {
        const GridSpec g;
        TsdfVolume vol;
        {
          py::gil_scoped_release release;
          vol = fuse(window, stored_depth_provider(), g);
        }
        return py::make_tuple(grid_array(g, vol.values), grid_array(g, vol.weights));
      },
      py::arg("window"), "TSDF values and weights indexed [z, y, x] on the default grid.");

  m.def(
      "detect",
      [](const CaptureWindow& window, int k) {
        DetectorConfig cfg;
        cfg.k = k;
        DetectionResult r;
        {
          py::gil_scoped_release release;
          r = detect(window, stored_depth_provider(), GridSpec{}, SuctionCupSpec{}, cfg);
        }
        py::list out;
        for (const auto& p : r.poses) out.append(pose_dict(p));
        return out;
      },
      py::arg("window"), py::arg("k") = 5);

  m.def(
      "declutter_json",
      [](const Scene& scene, double transparent_dropout, std::uint64_t seed) {
        DeclutterConfig cfg;
        cfg.depth_noise.transparent_dropout = transparent_dropout;
        cfg.depth_noise.seed = seed;
        py::gil_scoped_release release;
        return to_json(simulate_declutter(scene, cfg), false).dump();
      },
      py::arg("scene"), py::arg("transparent_dropout") = 0.0, py::arg("seed") = 0);
}
