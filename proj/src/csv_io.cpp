#include "bicsim/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bicsim/errors.hpp"

namespace bicsim {

namespace {

constexpr const char* kGenFields[] = {"omega", "delta", "Eq_prime", "P",      "Q",
                                      "Tm",    "Ef",    "sigma_T",  "sigma_E"};
constexpr int kGenFieldCount = 9;

void append_full_precision(std::string& out, double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    out.append(buf, static_cast<std::size_t>(len));
}

} // namespace

void export_csv(std::span<const TrajectoryRecord> records, const std::string& path) {
    if (records.empty()) throw ValidationError("export_csv: refusing to write an empty record set");
    const int n_gen = static_cast<int>(records.front().omega.size());
    const int n_bus = static_cast<int>(records.front().bus_v_mag.size());

    std::ofstream out(path);
    if (!out) throw Error("export_csv: cannot open '" + path + "' for writing");

    std::string line = "t";
    for (int g = 0; g < n_gen; ++g)
        for (const char* f : kGenFields) {
            line += ",g";
            line += std::to_string(g + 1);
            line += "_";
            line += f;
        }
    for (int b = 0; b < n_bus; ++b) line += ",bus" + std::to_string(b) + "_Vmag";
    out << line << '\n';

    for (const TrajectoryRecord& r : records) {
        line.clear();
        append_full_precision(line, r.time);
        const Eigen::VectorXd* blocks[kGenFieldCount] = {&r.omega, &r.delta, &r.e_q_prime,
                                                         &r.p,     &r.q,     &r.t_m,
                                                         &r.e_f,   &r.sigma_t, &r.sigma_e};
        for (int g = 0; g < n_gen; ++g)
            for (const Eigen::VectorXd* block : blocks) {
                line += ',';
                append_full_precision(line, (*block)(g));
            }
        for (int b = 0; b < n_bus; ++b) {
            line += ',';
            append_full_precision(line, r.bus_v_mag(b));
        }
        out << line << '\n';
    }
    if (!out) throw Error("export_csv: write failure on '" + path + "'");
}

std::vector<TrajectoryRecord> import_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("import_csv: cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw ValidationError("import_csv: empty file");

    int n_gen = 0, n_bus = 0;
    {
        std::stringstream hs(header);
        std::string col;
        bool first = true;
        while (std::getline(hs, col, ',')) {
            if (first) {
                if (col != "t") throw ValidationError("import_csv: first column must be 't'");
                first = false;
            } else if (col.rfind("bus", 0) == 0) {
                ++n_bus;
            }
        }
        std::stringstream hs2(header);
        int cols = 0;
        while (std::getline(hs2, col, ',')) ++cols;
        n_gen = (cols - 1 - n_bus) / kGenFieldCount;
        if (1 + n_gen * kGenFieldCount + n_bus != cols)
            throw ValidationError("import_csv: unexpected column layout");
    }

    std::vector<TrajectoryRecord> records;
    std::string line;
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        values.clear();
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{})
                throw ValidationError("import_csv: bad numeric field in '" + path + "'");
            values.push_back(v);
            p = (next < end && *next == ',') ? next + 1 : next;
        }
        if (static_cast<int>(values.size()) != 1 + n_gen * kGenFieldCount + n_bus)
            throw ValidationError("import_csv: row width does not match header");
        TrajectoryRecord r;
        r.time = values[0];
        Eigen::VectorXd* blocks[kGenFieldCount] = {&r.omega, &r.delta, &r.e_q_prime,
                                                   &r.p,     &r.q,     &r.t_m,
                                                   &r.e_f,   &r.sigma_t, &r.sigma_e};
        for (Eigen::VectorXd* block : blocks) block->resize(n_gen);
        int idx = 1;
        for (int g = 0; g < n_gen; ++g)
            for (Eigen::VectorXd* block : blocks) (*block)(g) = values[idx++];
        r.bus_v_mag.resize(n_bus);
        for (int b = 0; b < n_bus; ++b) r.bus_v_mag(b) = values[idx++];
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace bicsim
