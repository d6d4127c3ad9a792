#pragma once

#include <iosfwd>
#include <string>

#include "impctl/backward.hpp"
#include "impctl/combined.hpp"
#include "impctl/snell.hpp"
#include "impctl/strategy.hpp"

namespace impctl {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// level,index,state_cum,state_count,action,beta
void write_strategy_csv(std::ostream& out, const Strategy& strategy, const ImpulseModel& impulse);

/// Reads a strategy table against the impulse set; states must exist in a space with `budget`.
Strategy read_strategy_csv(std::istream& in, const ImpulseModel& impulse, int depth, int budget);

/// Largest state_count and level appearing in a strategy CSV.
struct StrategyCsvExtent {
    int max_level = 0;
    int max_count = 0;
};
StrategyCsvExtent scan_strategy_csv(std::istream& in);

/// n,level,index,state_cum,state_count,Y,Z,K_inc
void write_values_csv(std::ostream& out, const IterationResult& result);

/// level,index,state_cum,state_count,u_star for every continue entry below the horizon.
void write_controls_csv(std::ostream& out, const Strategy& strategy, const ControlTable& controls,
                        const ControlGrid& grid);

/// level,index,t,L,xmax,xmin,xavg
void write_tree_level_csv(std::ostream& out, const ScenarioTree& tree, int level);

/// level,index,value -> payoff; every node of every level must appear exactly once.
PayoffProcess read_payoff_csv(std::istream& in);

/// level,index,X,V,stop,first_stop
void write_envelope_csv(std::ostream& out, const PayoffProcess& payoff, const EnvelopeResult& env);

}  // namespace impctl
