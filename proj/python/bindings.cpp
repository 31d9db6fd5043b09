#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reluflow/experiments.hpp"
#include "reluflow/kuhn_grid.hpp"
#include "reluflow/network.hpp"
#include "reluflow/ode.hpp"
#include "reluflow/pwl.hpp"
#include "reluflow/resnet.hpp"

namespace py = pybind11;
using namespace reluflow;

namespace {

py::dict report_dict(const ComplexityReport& r)
{
    py::dict d;
    d["depth"] = r.depth;
    d["neurons"] = r.neurons;
    d["nonzero_weights"] = r.nonzero_weights;
    d["free_weights"] = r.free_weights;
    return d;
}

py::tuple trajectory_tuple(const Trajectory& traj)
{
    const auto& states = traj.states();
    Matrix xs(static_cast<Eigen::Index>(states.size()), states.front().size());
    for (std::size_t i = 0; i < states.size(); ++i)
        xs.row(static_cast<Eigen::Index>(i)) = states[i].transpose();
    return py::make_tuple(traj.times(), xs);
}

py::dict build_dict(BuiltResNet built)
{
    py::dict d;
    py::list blocks;
    for (const auto& b : built.report.blocks)
        blocks.append(report_dict(b));
    d["blocks"] = blocks;
    d["cube_radius"] = built.report.cube_radius;
    d["block_accuracy"] = built.report.block_accuracy;
    d["apriori_bound"] = built.report.apriori_bound;
    return d;
}

} // namespace

PYBIND11_MODULE(_reluflow, m)
{
    m.doc() = "Exact ReLU compilation of piecewise linear functions and ResNet flow approximation";

    py::register_exception<OracleFailure>(m, "OracleFailure", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<NetworkParams>(m, "Network")
        .def(py::init([](const std::vector<std::pair<Matrix, Vector>>& layers) {
                 std::vector<AffineMap> maps;
                 for (const auto& [w, b] : layers)
                     maps.emplace_back(w, b);
                 return NetworkParams(std::move(maps));
             }),
             py::arg("layers"), "Network from a list of (W, b) pairs.")
        .def_property_readonly("depth", &NetworkParams::depth)
        .def_property_readonly("input_dim", &NetworkParams::input_dim)
        .def_property_readonly("output_dim", &NetworkParams::output_dim)
        .def_property_readonly("layers",
                               [](const NetworkParams& n) {
                                   std::vector<std::pair<Matrix, Vector>> out;
                                   for (const auto& l : n.layers())
                                       out.emplace_back(Matrix(l.weights()), l.bias());
                                   return out;
                               })
        .def("__call__", [](const NetworkParams& n, const Vector& x) { return eval_network(n, x); }, py::arg("x"))
        .def(
            "eval_batch", [](const NetworkParams& n, const Matrix& xs) { return eval_network_batch(n, xs); },
            py::arg("xs"), "Evaluate one input per column.")
        .def("complexity", [](const NetworkParams& n) { return report_dict(complexity(n)); })
        .def("to_json", &network_to_json)
        .def_static("from_json", &network_from_json, py::arg("text"));

    m.def("identity_network", &identity_network, py::arg("d"), py::arg("depth"));
    m.def("abs_network", &abs_network, py::arg("d"), py::arg("depth") = 2);
    m.def("min2_network", &min2_network);
    m.def("min_tree_network", &min_tree_network, py::arg("d"));
    m.def("zero_network", &zero_network, py::arg("input_dim"), py::arg("output_dim"), py::arg("depth") = 1);
    m.def("parallelize", &parallelize, py::arg("nets"));
    m.def("sum_networks", &sum_networks, py::arg("nets"), py::arg("coefficients"));
    m.def("compose_networks", &compose_networks, py::arg("outer"), py::arg("inner"));

    py::class_<KuhnGrid>(m, "KuhnGrid")
        .def(py::init<std::size_t, double>(), py::arg("dim"), py::arg("cell_size"))
        .def_property_readonly("dim", &KuhnGrid::dim)
        .def_property_readonly("cell_size", &KuhnGrid::cell_size)
        .def_property_readonly("fineness", &KuhnGrid::fineness)
        .def_property_readonly("max_neighbors", &KuhnGrid::max_neighbors)
        .def(
            "locate",
            [](const KuhnGrid& g, const Vector& x) {
                const auto loc = locate(g, x);
                return py::make_tuple(loc.simplex.cell, loc.simplex.perm, barycentric(g, loc.simplex, x));
            },
            py::arg("x"), "(cell, perm, barycentric weights) of the simplex containing x.")
        .def(
            "neighborhood_size",
            [](const KuhnGrid& g, const std::vector<std::int64_t>& v) { return neighborhood(g, VertexRef{v}).size(); },
            py::arg("vertex"));
    m.def("omega_zero_contains", &omega_zero_contains, py::arg("z"));

    py::class_<PWLFunction>(m, "PWLFunction")
        .def_static("from_json", &pwl_from_json, py::arg("text"))
        .def("to_json", &pwl_to_json)
        .def("__call__", [](const PWLFunction& f, const Vector& x) { return eval_pwl(f, x); }, py::arg("x"))
        .def_property_readonly("input_dim", &PWLFunction::input_dim)
        .def_property_readonly("output_dim", &PWLFunction::output_dim)
        .def_property_readonly("cube_radius", &PWLFunction::cube_radius)
        .def_property_readonly("cell_size", [](const PWLFunction& f) { return f.grid().cell_size(); })
        .def_property_readonly("degrees_of_freedom", &PWLFunction::degrees_of_freedom);
    m.def("interpolate", &interpolate, py::arg("f"), py::arg("dim"), py::arg("r"), py::arg("delta"),
          "Nodal interpolant of f: R^d -> R^m on [-r, r]^d with fineness at most delta.");
    m.def("compile_pwl", &compile_pwl, py::arg("f"));
    m.def("compiled_depth", &compiled_depth, py::arg("d"));

    py::class_<RhsSpec>(m, "Rhs")
        .def("__call__", [](const RhsSpec& r, double t, const Vector& x) { return r(t, x); }, py::arg("t"),
             py::arg("x"))
        .def_property_readonly("dim", [](const RhsSpec& r) { return r.dim; })
        .def_property_readonly("bound_c", [](const RhsSpec& r) { return r.bound_c; })
        .def_property_readonly("lipschitz_L", [](const RhsSpec& r) { return r.lipschitz_L; });
    m.def(
        "make_rhs",
        [](const std::string& name, std::size_t dim, double value, std::size_t pieces) {
            RhsSpec rhs = make_rhs(name, dim, value);
            return pieces > 0 ? piecewise_constant(rhs, pieces) : rhs;
        },
        py::arg("name"), py::arg("dim"), py::arg("value") = 1.0, py::arg("pieces") = 0,
        "Named right-hand side: zero, sin, tanh, sin_time or const; pieces > 0 makes it piecewise constant in t.");
    m.def(
        "euler_solve",
        [](const RhsSpec& rhs, const Vector& y0, std::size_t n) {
            return trajectory_tuple(euler_solve(rhs, y0, uniform_partition(n)));
        },
        py::arg("rhs"), py::arg("y0"), py::arg("n"));
    m.def(
        "reference_solve",
        [](const RhsSpec& rhs, const Vector& y0, double tol) { return trajectory_tuple(reference_solve(rhs, y0, tol)); },
        py::arg("rhs"), py::arg("y0"), py::arg("tol") = 1e-8);
    m.def("gronwall_constant", &gronwall_constant, py::arg("beta_l1"));
    m.def("solution_map_bound", &solution_map_bound, py::arg("init_gap"), py::arg("rhs_gap_l1"),
          py::arg("lipschitz_l1"));
    m.def("perturbed_euler_bound", &perturbed_euler_bound, py::arg("eps"), py::arg("c"), py::arg("n"),
          py::arg("lipschitz_l1"));
    m.def("growth_bound", &growth_bound, py::arg("y0_norm"), py::arg("c"));

    py::class_<ResNetParams>(m, "ResNet")
        .def_property_readonly("dim", &ResNetParams::dim)
        .def_property_readonly("blocks", &ResNetParams::blocks)
        .def_property_readonly("block_refs", &ResNetParams::block_refs)
        .def("distinct_parameter_count", &ResNetParams::distinct_parameter_count)
        .def("block", [](const ResNetParams& r, std::size_t k) { return r.block(k); }, py::arg("k"))
        .def("__call__", [](const ResNetParams& r, double t, const Vector& y) { return eval_resnet(r, t, y); },
             py::arg("t"), py::arg("y"))
        .def("to_json", &resnet_to_json)
        .def_static("from_json", &resnet_from_json, py::arg("text"));
    m.def(
        "build_resnet",
        [](const RhsSpec& rhs, std::size_t n, double r, std::optional<double> block_accuracy, std::size_t threads) {
            auto built = build_resnet(rhs, n, r, BuildOptions{block_accuracy, threads});
            auto net = built.net;
            return py::make_tuple(std::move(net), build_dict(std::move(built)));
        },
        py::arg("rhs"), py::arg("n"), py::arg("r"), py::arg("block_accuracy") = py::none(), py::arg("threads") = 1,
        "(ResNet, report) with n blocks interpolating rhs on [-r, r]^d.");
    m.def(
        "build_shared_resnet",
        [](const RhsSpec& rhs, std::size_t k, double r, double block_accuracy, std::size_t threads) {
            auto built = build_shared_resnet(rhs, k, r, block_accuracy, threads);
            auto net = built.net;
            return py::make_tuple(std::move(net), build_dict(std::move(built)));
        },
        py::arg("rhs"), py::arg("k"), py::arg("r"), py::arg("block_accuracy"), py::arg("threads") = 1);

    m.def(
        "run_convergence",
        [](const std::string& config_text) {
            const auto config = parse_config(config_text);
            const auto report = run_convergence(config);
            py::dict d;
            d["csv"] = convergence_csv(report);
            d["slope"] = report.slope;
            d["growth_excess"] = report.growth_excess;
            py::list rows;
            for (const auto& r : report.rows) {
                py::dict row;
                row["n"] = r.n;
                row["sup_error"] = r.sup_error;
                row["apriori_bound"] = r.apriori_bound;
                rows.append(row);
            }
            d["rows"] = rows;
            return d;
        },
        py::arg("config_text"), "Convergence experiment from `key = value` config text.");
}
