#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "iabsa/baselines.hpp"
#include "iabsa/harness.hpp"

namespace py = pybind11;
using namespace iabsa;

namespace {

py::dict summary_dict(const Summary& s) {
    py::dict d;
    d["agent"] = agent_name(s.agent);
    d["seeds"] = s.seeds;
    d["episodes"] = s.episodes;
    d["steps"] = s.steps;
    d["mean_reward"] = s.mean_reward;
    d["mean_rates"] = s.mean_rates;
    d["qos_ratio"] = s.qos_ratio;
    return d;
}

ExperimentConfig with_agent(ExperimentConfig c, AgentKind kind) {
    c.agent.kind = kind;
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectrum allocation for integrated access and backhaul networks";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<InfeasibleAllocation>(m, "InfeasibleAllocation", base.ptr());
    py::register_exception<CapacityError>(m, "CapacityError", base.ptr());

    py::class_<Allocation>(m, "Allocation")
        .def(py::init<int, int>(), py::arg("L"), py::arg("M"))
        .def_readwrite("x", &Allocation::x)
        .def_readwrite("z", &Allocation::z)
        .def_property_readonly("L", &Allocation::L)
        .def_property_readonly("M", &Allocation::M)
        .def("__eq__", &Allocation::operator==)
        .def("__repr__", [](const Allocation& a) {
            return "<Allocation L=" + std::to_string(a.L()) + " M=" + std::to_string(a.M()) + ">";
        });

    m.def(
        "validate_allocation",
        [](const Allocation& a, int L, int M) -> std::optional<std::string> {
            const auto v = validate_allocation(a, L, M);
            if (!v) return std::nullopt;
            return std::string(constraint_name(v->constraint)) + ": " + v->message;
        },
        py::arg("alloc"), py::arg("L"), py::arg("M"), "None when feasible, otherwise the first violation.");
    m.def("full_reuse", &full_reuse, py::arg("L"), py::arg("M"));
    m.def("fixed_orthogonal", &fixed_orthogonal, py::arg("L"), py::arg("M"));
    m.def("encode_action", &encode_action, py::arg("index"), py::arg("L"), py::arg("M"));
    m.def("decode_action", &decode_action, py::arg("alloc"));
    m.def("action_space_size", &action_space_size, py::arg("L"), py::arg("M"));

    py::class_<ExperimentConfig>(m, "Config")
        .def_property_readonly("L", [](const ExperimentConfig& c) { return c.env.network.L; })
        .def_property_readonly("M", [](const ExperimentConfig& c) { return c.env.network.M; })
        .def_property_readonly("horizon", [](const ExperimentConfig& c) { return c.env.episode.horizon; })
        .def_property_readonly("agent", [](const ExperimentConfig& c) { return std::string(agent_name(c.agent.kind)); })
        .def_property(
            "output_dir", [](const ExperimentConfig& c) { return c.run.output_dir; },
            [](ExperimentConfig& c, std::string dir) { c.run.output_dir = std::move(dir); })
        .def_property(
            "seeds", [](const ExperimentConfig& c) { return c.run.seeds; },
            [](ExperimentConfig& c, std::vector<std::uint64_t> s) {
                c.run.seeds = std::move(s);
                c.validate();
            })
        .def("dump", &dump_config);

    m.def("parse_config", &parse_config, py::arg("text"));
    m.def("load_config", &load_config, py::arg("path"));

    py::class_<IabEnv>(m, "Env")
        .def(py::init([](const ExperimentConfig& c) { return IabEnv(c.env); }), py::arg("config"))
        .def("reset", py::overload_cast<std::uint64_t>(&IabEnv::reset), py::arg("seed"))
        .def(
            "step",
            [](IabEnv& env, const Allocation& a) {
                StepResult r = env.step(a);
                return py::make_tuple(r.obs, r.reward, r.rates.rates, r.truncated);
            },
            py::arg("alloc"), "Returns (observation, reward, rates, truncated).")
        .def("evaluate", &IabEnv::evaluate, py::arg("alloc"))
        .def(
            "oracle",
            [](const IabEnv& env) {
                const OracleResult r = exhaustive_oracle(env.channel(), env.options().channel, env.options().rates,
                                                         env.L(), env.M());
                return py::make_tuple(r.best_alloc, r.best_utility);
            },
            "Best allocation and its utility under the current channel.")
        .def_property_readonly("L", &IabEnv::L)
        .def_property_readonly("M", &IabEnv::M)
        .def_property_readonly("t", &IabEnv::t);

    m.def(
        "train", [](const ExperimentConfig& c) { return run_train(c); }, py::arg("config"),
        py::call_guard<py::gil_scoped_release>(), "Trains every configured seed; returns the metrics path.");
    m.def(
        "evaluate",
        [](const ExperimentConfig& c, std::optional<std::filesystem::path> checkpoint) {
            Summary s;
            {
                py::gil_scoped_release release;
                s = run_eval(c, checkpoint);
            }
            return summary_dict(s);
        },
        py::arg("config"), py::arg("checkpoint") = py::none());
    m.def(
        "improvement_check",
        [](const ExperimentConfig& c, std::optional<std::filesystem::path> checkpoint) {
            ImprovementResult r;
            {
                py::gil_scoped_release release;
                const ExperimentConfig b = with_agent(c, c.check.baseline);
                r = policy_improvement_check(c, controller_factory(b, std::nullopt), controller_factory(c, checkpoint));
            }
            py::dict d;
            d["passed"] = r.passed;
            d["strict"] = r.strict;
            d["mean_improved"] = r.mean_improved;
            d["mean_baseline"] = r.mean_baseline;
            d["stderr_diff"] = r.stderr_diff;
            return d;
        },
        py::arg("config"), py::arg("checkpoint") = py::none());
}
