#include "bicsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bicsim/errors.hpp"

namespace bicsim {

namespace {

using nlohmann::json;

const json& require(const json& doc, const char* field, const char* context) {
    auto it = doc.find(field);
    if (it == doc.end()) {
        std::ostringstream os;
        os << "scenario: missing field '" << field << "' in " << context;
        throw ValidationError(os.str());
    }
    return *it;
}

double require_number(const json& doc, const char* field, const char* context) {
    const json& v = require(doc, field, context);
    if (!v.is_number()) {
        std::ostringstream os;
        os << "scenario: field '" << field << "' in " << context << " must be a number";
        throw ValidationError(os.str());
    }
    return v.get<double>();
}

int require_int(const json& doc, const char* field, const char* context) {
    const json& v = require(doc, field, context);
    if (!v.is_number_integer()) {
        std::ostringstream os;
        os << "scenario: field '" << field << "' in " << context << " must be an integer";
        throw ValidationError(os.str());
    }
    return v.get<int>();
}

Eigen::VectorXd require_vector(const json& doc, const char* field, const char* context,
                               int expected_size) {
    const json& v = require(doc, field, context);
    if (!v.is_array() || static_cast<int>(v.size()) != expected_size) {
        std::ostringstream os;
        os << "scenario: field '" << field << "' in " << context << " must be an array of length "
           << expected_size;
        throw ValidationError(os.str());
    }
    Eigen::VectorXd out(expected_size);
    for (int i = 0; i < expected_size; ++i) out(i) = v[i].get<double>();
    return out;
}

} // namespace

void Scenario::validate() const {
    if (n_buses <= 0) throw ValidationError("scenario: buses must be positive");
    if (!(base_frequency_hz > 0.0))
        throw ValidationError("scenario: base_frequency_hz must be positive");
    if (lines.empty()) throw ValidationError("scenario: at least one line required");
    if (generators.empty()) throw ValidationError("scenario: at least one generator required");
    const int n = n_generators();
    if (static_cast<int>(gen_bus.size()) != n || static_cast<int>(dispatch_p.size()) != n ||
        static_cast<int>(v_setpoint.size()) != n)
        throw ValidationError("scenario: generator attribute arrays disagree in length");
    std::set<int> seen_buses;
    for (int g = 0; g < n; ++g) {
        generators[g].validate();
        if (gen_bus[g] < 0 || gen_bus[g] >= n_buses)
            throw ValidationError("scenario: generator bus index out of range");
        if (!seen_buses.insert(gen_bus[g]).second)
            throw ValidationError("scenario: one generator per bus required");
        if (!(v_setpoint[g] > 0.0))
            throw ValidationError("scenario: generator voltage setpoint must be positive");
    }
    if (slack_gen < 0 || slack_gen >= n)
        throw ValidationError("scenario: slack_generator out of range");
    for (const Line& l : lines) {
        if (l.from < 0 || l.from >= n_buses || l.to < 0 || l.to >= n_buses)
            throw ValidationError("scenario: line bus index out of range");
        if (l.from == l.to) throw ValidationError("scenario: line endpoints must differ");
        if (l.resistance == 0.0 && l.reactance == 0.0)
            throw ValidationError("scenario: line with zero series impedance");
    }
    for (const LoadAdmittance& l : loads) {
        if (l.bus < 0 || l.bus >= n_buses)
            throw ValidationError("scenario: load bus index out of range");
        if (l.admittance.real() < 0.0)
            throw ValidationError("scenario: load conductance must be non-negative");
    }
    controller.validate();
    if (controller.size() != n)
        throw ValidationError("scenario: controller vectors must match generator count");
    if (graph.size() != n)
        throw ValidationError("scenario: adjacency must match generator count");
    if (!(dt > 0.0)) throw ValidationError("scenario: dt must be positive");
    if (!(t_end > 0.0)) throw ValidationError("scenario: t_end must be positive");
    if (record_every <= 0) throw ValidationError("scenario: record_every must be positive");

    double prev_time = -1.0;
    std::set<std::string> open_loads;
    for (const Event& e : events) {
        if (e.time < 0.0 || e.time > t_end)
            throw ValidationError("scenario: event time outside [0, t_end]");
        if (e.time < prev_time) throw ValidationError("scenario: events must be sorted by time");
        prev_time = e.time;
        const double steps = e.time / dt;
        if (std::abs(steps - std::round(steps)) > 1e-9)
            throw ValidationError("scenario: dt must divide every event time");
        switch (e.kind) {
        case Event::Kind::LoadAdd:
            if (e.bus < 0 || e.bus >= n_buses)
                throw ValidationError("scenario: load_add bus index out of range");
            if (e.id.empty()) throw ValidationError("scenario: load_add requires an id");
            if (!open_loads.insert(e.id).second)
                throw ValidationError("scenario: duplicate load_add id '" + e.id + "'");
            break;
        case Event::Kind::LoadRemove:
            if (open_loads.erase(e.ref) == 0)
                throw ValidationError("scenario: load_remove ref '" + e.ref +
                                      "' does not match an active load_add");
            break;
        case Event::Kind::ControllerActivate:
            break;
        }
    }
}

Scenario parse_scenario(const json& doc) {
    Scenario s;
    s.name = doc.value("name", std::string{});
    s.base_frequency_hz = doc.value("base_frequency_hz", kDefaultBaseFrequencyHz);
    s.n_buses = require_int(doc, "buses", "scenario");

    for (const json& jl : require(doc, "lines", "scenario")) {
        Line l;
        l.from = require_int(jl, "from", "line");
        l.to = require_int(jl, "to", "line");
        l.resistance = require_number(jl, "r", "line");
        l.reactance = require_number(jl, "x", "line");
        l.shunt_susceptance = jl.value("b", 0.0);
        s.lines.push_back(l);
    }
    if (doc.contains("loads")) {
        for (const json& jl : doc["loads"]) {
            LoadAdmittance l;
            l.bus = require_int(jl, "bus", "load");
            l.admittance = Complex(require_number(jl, "g", "load"), jl.value("b", 0.0));
            s.loads.push_back(l);
        }
    }

    const double omega_b = 2.0 * M_PI * s.base_frequency_hz;
    for (const json& jg : require(doc, "generators", "scenario")) {
        GeneratorParams p;
        p.inertia = require_number(jg, "H", "generator");
        p.damping = require_number(jg, "D", "generator");
        p.t_d0_prime = require_number(jg, "Td0p", "generator");
        p.x_d = require_number(jg, "Xd", "generator");
        p.x_d_prime = require_number(jg, "Xdp", "generator");
        p.x_q_prime = require_number(jg, "Xqp", "generator");
        p.r_a = require_number(jg, "ra", "generator");
        p.omega_b = omega_b;
        s.generators.push_back(p);
        s.gen_bus.push_back(require_int(jg, "bus", "generator"));
        s.dispatch_p.push_back(jg.value("dispatch_p", 0.0));
        s.v_setpoint.push_back(jg.value("v_setpoint", 1.0));
    }
    const int n = s.n_generators();

    const json& jc = require(doc, "controller", "scenario");
    s.controller.k_t = require_number(jc, "kT", "controller");
    s.controller.k_p = require_number(jc, "kP", "controller");
    s.controller.k_e = require_number(jc, "kE", "controller");
    s.controller.k_leak = require_number(jc, "k", "controller");
    s.controller.omega_s = jc.value("omega_s", 1.0);
    s.controller.n_gains = require_vector(jc, "n", "controller", n);
    s.controller.m_gains = require_vector(jc, "m", "controller", n);
    s.controller.dt_max = require_vector(jc, "dTmax", "controller", n);
    s.controller.dt_min = require_vector(jc, "dTmin", "controller", n);
    s.controller.de_max = require_vector(jc, "dEmax", "controller", n);
    s.controller.de_min = require_vector(jc, "dEmin", "controller", n);
    s.controller.t_m_nominal = Eigen::VectorXd::Zero(n);
    s.controller.e_f_nominal = Eigen::VectorXd::Zero(n);
    for (GeneratorParams& p : s.generators) p.omega_s = s.controller.omega_s;

    const json& ja = require(doc, "adjacency", "scenario");
    if (!ja.is_array() || static_cast<int>(ja.size()) != n)
        throw ValidationError("scenario: adjacency must be an n x n array");
    Eigen::MatrixXi a(n, n);
    for (int i = 0; i < n; ++i) {
        if (!ja[i].is_array() || static_cast<int>(ja[i].size()) != n)
            throw ValidationError("scenario: adjacency must be an n x n array");
        for (int j = 0; j < n; ++j) a(i, j) = ja[i][j].get<int>();
    }
    s.graph = CommGraph(a);

    s.slack_gen = doc.value("slack_generator", 0);

    if (doc.contains("events")) {
        for (const json& je : doc["events"]) {
            Event e;
            e.time = require_number(je, "time", "event");
            const std::string type = require(je, "type", "event").get<std::string>();
            if (type == "controller_activate") {
                e.kind = Event::Kind::ControllerActivate;
            } else if (type == "load_add") {
                e.kind = Event::Kind::LoadAdd;
                e.bus = require_int(je, "bus", "load_add event");
                e.p = require_number(je, "p", "load_add event");
                e.q = je.value("q", 0.0);
                e.id = require(je, "id", "load_add event").get<std::string>();
            } else if (type == "load_remove") {
                e.kind = Event::Kind::LoadRemove;
                e.ref = require(je, "ref", "load_remove event").get<std::string>();
            } else {
                throw ValidationError("scenario: unknown event type '" + type + "'");
            }
            s.events.push_back(e);
        }
    }

    s.t_end = require_number(doc, "t_end", "scenario");
    s.dt = doc.value("dt", 1e-3);
    s.record_every = doc.value("record_every", 100);

    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario: cannot open file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("scenario: JSON parse error: ") + e.what());
    }
    return parse_scenario(doc);
}

json scenario_to_json(const Scenario& s) {
    json doc;
    doc["name"] = s.name;
    doc["base_frequency_hz"] = s.base_frequency_hz;
    doc["buses"] = s.n_buses;
    doc["lines"] = json::array();
    for (const Line& l : s.lines)
        doc["lines"].push_back({{"from", l.from},
                                {"to", l.to},
                                {"r", l.resistance},
                                {"x", l.reactance},
                                {"b", l.shunt_susceptance}});
    doc["loads"] = json::array();
    for (const LoadAdmittance& l : s.loads)
        doc["loads"].push_back(
            {{"bus", l.bus}, {"g", l.admittance.real()}, {"b", l.admittance.imag()}});
    doc["generators"] = json::array();
    for (int g = 0; g < s.n_generators(); ++g) {
        const GeneratorParams& p = s.generators[g];
        doc["generators"].push_back({{"bus", s.gen_bus[g]},
                                     {"H", p.inertia},
                                     {"D", p.damping},
                                     {"Td0p", p.t_d0_prime},
                                     {"Xd", p.x_d},
                                     {"Xdp", p.x_d_prime},
                                     {"Xqp", p.x_q_prime},
                                     {"ra", p.r_a},
                                     {"dispatch_p", s.dispatch_p[g]},
                                     {"v_setpoint", s.v_setpoint[g]}});
    }
    doc["slack_generator"] = s.slack_gen;
    const ControllerParams& c = s.controller;
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    doc["controller"] = {{"kT", c.k_t},       {"kP", c.k_p},
                         {"kE", c.k_e},       {"k", c.k_leak},
                         {"omega_s", c.omega_s}, {"n", vec(c.n_gains)},
                         {"m", vec(c.m_gains)},  {"dTmax", vec(c.dt_max)},
                         {"dTmin", vec(c.dt_min)}, {"dEmax", vec(c.de_max)},
                         {"dEmin", vec(c.de_min)}};
    doc["adjacency"] = json::array();
    for (int i = 0; i < s.graph.size(); ++i) {
        json row = json::array();
        for (int j = 0; j < s.graph.size(); ++j) row.push_back(s.graph.adjacency()(i, j));
        doc["adjacency"].push_back(row);
    }
    doc["events"] = json::array();
    for (const Event& e : s.events) {
        json je{{"time", e.time}};
        switch (e.kind) {
        case Event::Kind::ControllerActivate:
            je["type"] = "controller_activate";
            break;
        case Event::Kind::LoadAdd:
            je["type"] = "load_add";
            je["bus"] = e.bus;
            je["p"] = e.p;
            je["q"] = e.q;
            je["id"] = e.id;
            break;
        case Event::Kind::LoadRemove:
            je["type"] = "load_remove";
            je["ref"] = e.ref;
            break;
        }
        doc["events"].push_back(je);
    }
    doc["t_end"] = s.t_end;
    doc["dt"] = s.dt;
    doc["record_every"] = s.record_every;
    return doc;
}

} // namespace bicsim
