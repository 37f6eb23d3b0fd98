#include "lmcf/snapshot_io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace lmcf {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_field(const std::string& text, const char* what, int line_no) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("snapshot CSV line ") + std::to_string(line_no) +
                                 ": bad " + what + " value '" + text + "'");
    }
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", value);
    return buf.data();
}

void write_snapshots_csv(const std::string& path, const GridField& u) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    const int n = u.grid.n;
    for (int d = 0; d < n; ++d) out << 'x' << (d + 1) << ',';
    out << "t,u\n";
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), n);
    for (std::size_t lev = 0; lev < u.level_count(); ++lev) {
        std::string t_text = format_double(u.times[lev]);
        for (std::int64_t node = 0; node < u.grid.node_count(); ++node) {
            u.grid.node_coords(node, x);
            for (int d = 0; d < n; ++d) out << format_double(x[d]) << ',';
            out << t_text << ',' << format_double(u.levels[lev][node]) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

GridField read_snapshots_csv(const std::string& path, const SpaceTimeGrid& grid) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
    {
        std::ostringstream expect;
        for (int d = 0; d < grid.n; ++d) expect << 'x' << (d + 1) << ',';
        expect << "t,u";
        if (line != expect.str())
            throw std::runtime_error("'" + path + "': header mismatch, expected '" +
                                     expect.str() + "'");
    }
    GridField u(grid);
    std::vector<double> level;
    double level_t = 0.0;
    std::int64_t node = 0;
    std::array<double, 3> xbuf{};
    std::span<double> x(xbuf.data(), grid.n);
    int line_no = 1;
    auto flush_level = [&]() {
        if (level.empty()) return;
        if (node != grid.node_count())
            throw std::runtime_error("'" + path + "': level at t=" + format_double(level_t) +
                                     " has " + std::to_string(node) + " rows, expected " +
                                     std::to_string(grid.node_count()));
        u.add_level(level_t, std::move(level));
        level.clear();
        node = 0;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_csv(line);
        if (static_cast<int>(fields.size()) != grid.n + 2)
            throw std::runtime_error("snapshot CSV line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(grid.n + 2) + " fields");
        double t = parse_field(fields[grid.n], "time", line_no);
        double value = parse_field(fields[grid.n + 1], "solution", line_no);
        if (level.empty() || t != level_t) {
            flush_level();
            level_t = t;
        }
        grid.node_coords(node, x);
        for (int d = 0; d < grid.n; ++d) {
            double xd = parse_field(fields[d], "coordinate", line_no);
            if (std::abs(xd - x[d]) > 1e-9)
                throw std::runtime_error("snapshot CSV line " + std::to_string(line_no) +
                                         ": coordinate " + fields[d] +
                                         " does not match the grid order");
        }
        level.push_back(value);
        ++node;
    }
    flush_level();
    if (u.level_count() == 0) throw std::runtime_error("'" + path + "' holds no levels");
    return u;
}

void write_barrier_table_csv(const std::string& path, const BarrierProfile& sub,
                             const BarrierProfile& super, int points) {
    if (points < 2) throw std::invalid_argument("write_barrier_table_csv: need >= 2 points");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "s,w_sub,v_sub,w_super,v_super,trap_lo_sub,trap_hi_sub,trap_lo_super,"
           "trap_hi_super\n";
    double s_hi = std::min(sub.s_max, super.s_max);
    const double s_lo = 1e-2;
    for (int i = 0; i < points; ++i) {
        double s;
        if (i == 0) {
            s = 0.0;
        } else {
            double frac = static_cast<double>(i - 1) / (points - 2);
            s = s_lo * std::pow(s_hi / s_lo, frac);
        }
        double lo_sub = invert_f1(sub.params, sub.env, s, BarrierBranch::sub);
        double hi_sub = w_blowup(sub.params, sub.env, s, BarrierBranch::sub);
        double lo_super = w_blowup(super.params, super.env, s, BarrierBranch::super);
        double hi_super = invert_f1(super.params, super.env, s, BarrierBranch::super);
        out << format_double(s) << ',' << format_double(sub.eval_w(s)) << ','
            << format_double(sub.eval_v(s)) << ',' << format_double(super.eval_w(s)) << ','
            << format_double(super.eval_v(s)) << ',' << format_double(lo_sub) << ','
            << format_double(hi_sub) << ',' << format_double(lo_super) << ','
            << format_double(hi_super) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace lmcf
