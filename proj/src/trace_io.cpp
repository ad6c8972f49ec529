#include "sigma2/trace_io.hpp"

#include "sigma2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sigma2 {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string trace_table(const ContinuationTrace& trace) {
    std::ostringstream os;
    os << "# path parameter: " << trace.parameter_name << "; residual: sup-norm of the discrete equation\n"
       << "# sup_hess: max |eigenvalue| of the covariant Hessian; max_unn: max over boundary of Hess u(grad d, grad d)\n"
       << "# vol_conf: int e^{-n u} dmu_g; supervol: (1 - t_path)(int e^{-4u} dmu_g)^{1/2}; cc_flag: 1 if (CC) holds\n"
       << "parameter,iterations,residual,sup_grad,sup_hess,max_unn,min_sigma2,cone_margin,vol_conf,supervol,cc_flag\n";
    for (const auto& r : trace.records) {
        if (!r.accepted) continue;
        const auto& m = r.report;
        os << format_double(r.parameter) << ',' << r.iterations << ',' << format_double(r.residual) << ','
           << format_double(m.sup_grad) << ',' << format_double(m.sup_hess) << ',' << format_double(m.max_unn) << ','
           << format_double(m.min_sigma2) << ',' << format_double(m.cone_margin) << ',' << format_double(m.vol_conf)
           << ',' << format_double(m.supervol) << ',' << (m.cc_flag ? 1 : 0) << '\n';
    }
    return os.str();
}

void write_trace(const ContinuationTrace& trace, const std::filesystem::path& path) {
    write_text(path, trace_table(trace));
}

void write_summary(const Summary& summary, const std::filesystem::path& path) {
    std::string text;
    for (const auto& [k, v] : summary) text += k + "=" + v + "\n";
    write_text(path, text);
}

Summary read_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    Summary s;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        s.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return s;
}

void append_monitor(Summary& s, const std::string& prefix, const MonitorReport& r) {
    s.emplace_back(prefix + "sup_grad", format_double(r.sup_grad));
    s.emplace_back(prefix + "sup_hess", format_double(r.sup_hess));
    s.emplace_back(prefix + "max_interior_hess", format_double(r.max_interior_hess));
    s.emplace_back(prefix + "max_unn", format_double(r.max_unn));
    s.emplace_back(prefix + "min_sigma1", format_double(r.min_sigma1));
    s.emplace_back(prefix + "min_sigma2", format_double(r.min_sigma2));
    s.emplace_back(prefix + "cone_margin", format_double(r.cone_margin));
    s.emplace_back(prefix + "vol_conf", format_double(r.vol_conf));
    s.emplace_back(prefix + "supervol", format_double(r.supervol));
    s.emplace_back(prefix + "cc_flag", r.cc_flag ? "1" : "0");
}

Summary summarize(const EigenResult& r) {
    Summary s;
    s.emplace_back("lambda", format_double(r.lambda));
    s.emplace_back("lambda_schedule", format_double(r.lambda_schedule));
    s.emplace_back("converged", r.converged ? "1" : "0");
    std::string sched;
    for (double e : r.schedule) sched += (sched.empty() ? "" : ",") + format_double(e);
    s.emplace_back("eps_schedule", sched);
    s.emplace_back("interior_residual", format_double(r.interior_residual));
    s.emplace_back("boundary_residual", format_double(r.boundary_residual));
    s.emplace_back("mean_v", format_double(r.mean_v));
    double vmax = 0.0;
    for (double x : r.v) vmax = std::max(vmax, std::abs(x));
    s.emplace_back("sup_abs_v", format_double(vmax));
    append_monitor(s, "monitor.", r.report);
    return s;
}

std::vector<std::filesystem::path> emit_plot_data(const ContinuationTrace& trace, const std::filesystem::path& dir) {
    const auto rows = trace.accepted();
    if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "cannot emit plot data for an empty trace");
    std::filesystem::create_directories(dir);
    struct Series {
        const char* name;
        double (*get)(const TraceRecord&);
    };
    const Series series[] = {
        {"residual", [](const TraceRecord& r) { return r.residual; }},
        {"sup_hess", [](const TraceRecord& r) { return r.report.sup_hess; }},
        {"max_unn", [](const TraceRecord& r) { return r.report.max_unn; }},
        {"vol_conf", [](const TraceRecord& r) { return r.report.vol_conf; }},
    };
    std::vector<std::filesystem::path> out;
    for (const auto& s : series) {
        std::string text = std::string("# ") + trace.parameter_name + " vs " + s.name + "\n" + trace.parameter_name +
                           "," + s.name + "\n";
        for (const auto& r : rows) text += format_double(r.parameter) + "," + format_double(s.get(r)) + "\n";
        const auto path = dir / (std::string(s.name) + ".csv");
        write_text(path, text);
        out.push_back(path);
    }
    return out;
}

void write_lambda_table(const EigenResult& result, const std::filesystem::path& path) {
    std::string text = "# Lambda_eps = exp(eps * mean u) at s = 1\neps,lambda,mean_u,iterations,sup_hess,max_unn\n";
    for (const auto& r : result.table)
        text += format_double(r.eps) + "," + format_double(r.lambda) + "," + format_double(r.mean_u) + "," +
                std::to_string(r.iterations) + "," + format_double(r.report.sup_hess) + "," +
                format_double(r.report.max_unn) + "\n";
    write_text(path, text);
}

}  // namespace sigma2
