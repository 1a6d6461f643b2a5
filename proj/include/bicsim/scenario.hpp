#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bicsim/comm_graph.hpp"
#include "bicsim/controller.hpp"
#include "bicsim/network.hpp"

namespace bicsim {

/// Timed event applied at a step boundary during a run.
struct Event {
    enum class Kind { ControllerActivate, LoadAdd, LoadRemove };
    Kind kind = Kind::ControllerActivate;
    double time = 0.0;
    int bus = -1;          ///< LoadAdd only
    double p = 0.0;        ///< LoadAdd: real power at pre-event voltage, pu
    double q = 0.0;        ///< LoadAdd: reactive power at pre-event voltage, pu
    std::string id;        ///< LoadAdd: handle for later removal
    std::string ref;       ///< LoadRemove: id of the load to drop
};

/// A complete experiment description: network, machines, controller, graph,
/// event script and integration settings.
struct Scenario {
    std::string name;
    double base_frequency_hz = kDefaultBaseFrequencyHz;
    int n_buses = 0;
    std::vector<Line> lines;
    std::vector<LoadAdmittance> loads;
    std::vector<GeneratorParams> generators;
    std::vector<int> gen_bus;
    std::vector<double> dispatch_p;  ///< load-flow dispatch (slack entry ignored)
    std::vector<double> v_setpoint;
    int slack_gen = 0;
    ControllerParams controller; ///< nominal inputs filled by equilibrium init
    CommGraph graph;
    std::vector<Event> events;
    double t_end = 0.0;
    double dt = 1e-3;
    int record_every = 100;

    int n_generators() const { return static_cast<int>(generators.size()); }
    void validate() const;
};

/// Parses and fully validates a scenario document.
Scenario parse_scenario(const nlohmann::json& doc);

/// Reads, parses and validates a scenario file.
Scenario load_scenario(const std::string& path);

/// Scenario with every default resolved, as a document (the `validate` echo).
nlohmann::json scenario_to_json(const Scenario& s);

} // namespace bicsim
