#include "mwlil/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mwlil {

std::string_view result_csv_header() { return "experiment_id,metric,n,value,std_error,method"; }

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
    std::string out(result_csv_header());
    out += '\n';
    for (const auto& r : rows) {
        out += r.experiment_id;
        out += ',';
        out += r.metric;
        out += ',';
        if (r.n) out += std::to_string(*r.n);
        out += ',';
        out += format_double(r.value);
        out += ',';
        out += format_double(r.std_error);
        out += ',';
        out += r.method;
        out += '\n';
    }
    return out;
}

std::string Table::csv() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw std::logic_error("table row width differs from header");
        line(r);
    }
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace mwlil
