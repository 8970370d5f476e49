#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "qbsde/closed_form.hpp"
#include "qbsde/envelope.hpp"
#include "qbsde/mc_engine.hpp"
#include "qbsde/transforms.hpp"

namespace qbsde {

// shortest round-trippable decimal form, locale-independent
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline void write_transform_csv(const ZvonkinTransform& t, std::ostream& os) {
    os << "x,u,du\n";
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
        os << fmt(t.nodes[i]) << ',' << fmt(t.u[i]) << ',' << fmt(t.du[i]) << '\n';
}

inline void write_path_surface_csv(const SolutionSurface& s, std::ostream& os,
                                   std::size_t max_paths) {
    os << "t,path,W,Y,Z\n";
    const std::size_t M = s.y.front().size();
    const std::size_t shown = max_paths == 0 ? M : std::min(M, max_paths);
    for (std::size_t i = 0; i < s.y.size(); ++i) {
        const double t = s.grid.T * static_cast<double>(i) / static_cast<double>(s.y.size() - 1);
        for (std::size_t j = 0; j < shown; ++j)
            os << fmt(t) << ',' << j << ',' << fmt(s.w[i][j]) << ',' << fmt(s.y[i][j]) << ','
               << fmt(s.z[i][j]) << '\n';
    }
}

inline void write_state_surface_csv(const SolutionSurface& s, std::ostream& os) {
    os << "t,x,Y,Z\n";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
        const double t = s.grid.T * static_cast<double>(i) / static_cast<double>(s.y.size() - 1);
        for (std::size_t j = 0; j < s.states.size(); ++j)
            os << fmt(t) << ',' << fmt(s.states[j]) << ',' << fmt(s.y[i][j]) << ','
               << fmt(s.z[i][j]) << '\n';
    }
}

// lattice of closed-form values together with the a-priori bounds
inline void write_bounded_lattice_csv(const std::vector<double>& times,
                                      const std::vector<double>& states,
                                      const std::vector<std::vector<double>>& y,
                                      const std::vector<std::vector<double>>& z,
                                      const EnvelopeBounds& env, std::ostream& os) {
    os << "t,x,Y,Z,L,U\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = 0; j < states.size(); ++j)
            os << fmt(times[i]) << ',' << fmt(states[j]) << ',' << fmt(y[i][j]) << ','
               << fmt(z[i][j]) << ',' << fmt(env.lower[i][j]) << ',' << fmt(env.upper[i][j])
               << '\n';
}

inline void write_control_table_csv(const std::vector<ControlEstimate>& table, std::ostream& os) {
    os << "control_id,pattern,estimate,stderr\n";
    for (const auto& row : table)
        os << row.id << ',' << row.pattern << ',' << fmt(row.estimate) << ',' << fmt(row.stderr_)
           << '\n';
}

struct ConvergenceRow {
    int nx = 0;
    int nt = 0;
    double error = 0.0;
};

inline void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& os) {
    os << "nx,nt,error\n";
    for (const auto& r : rows)
        os << r.nx << ',' << r.nt << ',' << fmt(r.error) << '\n';
}

} // namespace qbsde
