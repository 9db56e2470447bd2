#include "drmpc/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace drmpc {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i];
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    if (rows.empty()) return Eigen::MatrixXd();
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size())
            throw std::runtime_error("matrix rows of unequal length");
        for (size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return m;
}

}  // namespace

void write_dataset_csv(const TrajectoryDataset& data, const std::string& path) {
    data.validate();
    std::ostringstream out;
    out << "# drmpc dataset v1\n";
    out << "# n=" << data.n << " m=" << data.m << " T=" << data.T
        << " N=" << data.size() << " seed=" << data.seed << "\n";
    out << "# noise=" << data.noise_desc << " input=" << data.input_desc
        << " init=" << data.init_desc << "\n";
    out << "# columns:";
    for (Eigen::Index j = 0; j < data.records[0].z.size(); ++j) out << " z_" << j;
    for (Eigen::Index j = 0; j < data.records[0].y.size(); ++j) out << " y_" << j;
    out << "\n";
    for (const auto& rec : data.records) {
        for (Eigen::Index j = 0; j < rec.z.size(); ++j) {
            if (j > 0) out << ",";
            out << format_double(rec.z(j));
        }
        for (Eigen::Index j = 0; j < rec.y.size(); ++j)
            out << "," << format_double(rec.y(j));
        out << "\n";
    }
    write_text_file(path, out.str());
}

TrajectoryDataset read_dataset_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    TrajectoryDataset data;
    int declared_n = -1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream header(line.substr(1));
            std::string token;
            while (header >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = token.substr(0, eq);
                const std::string value = token.substr(eq + 1);
                if (key == "n") data.n = std::stoi(value), declared_n = data.n;
                else if (key == "m") data.m = std::stoi(value);
                else if (key == "T") data.T = std::stoi(value);
                else if (key == "seed") data.seed = std::stoull(value);
                else if (key == "noise") data.noise_desc = value;
                else if (key == "input") data.input_desc = value;
                else if (key == "init") data.init_desc = value;
            }
            continue;
        }
        std::vector<double> fields;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) fields.push_back(std::stod(cell));
        const int zdim = data.n + data.m * data.T;
        const int ydim = data.n * data.T;
        if (declared_n < 0 || static_cast<int>(fields.size()) != zdim + ydim)
            throw std::runtime_error("dataset csv: malformed row in " + path);
        TrajectoryRecord rec;
        rec.z = Eigen::Map<Eigen::VectorXd>(fields.data(), zdim);
        rec.y = Eigen::Map<Eigen::VectorXd>(fields.data() + zdim, ydim);
        data.records.push_back(std::move(rec));
    }
    data.validate();
    return data;
}

void write_dataset_json(const TrajectoryDataset& data, const std::string& path) {
    data.validate();
    json doc;
    doc["schema"] = "drmpc-dataset-v1";
    doc["n"] = data.n;
    doc["m"] = data.m;
    doc["T"] = data.T;
    doc["N"] = data.size();
    doc["seed"] = data.seed;
    doc["noise"] = data.noise_desc;
    doc["input"] = data.input_desc;
    doc["init"] = data.init_desc;
    json records = json::array();
    for (const auto& rec : data.records) {
        json r;
        r["z"] = vector_to_json(rec.z);
        r["y"] = vector_to_json(rec.y);
        records.push_back(std::move(r));
    }
    doc["records"] = std::move(records);
    write_text_file(path, doc.dump(2) + "\n");
}

TrajectoryDataset read_dataset_json(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    TrajectoryDataset data;
    data.n = doc.at("n");
    data.m = doc.at("m");
    data.T = doc.at("T");
    data.seed = doc.value("seed", 0ULL);
    data.noise_desc = doc.value("noise", "zero");
    data.input_desc = doc.value("input", "zero");
    data.init_desc = doc.value("init", "zero");
    for (const auto& r : doc.at("records")) {
        TrajectoryRecord rec;
        rec.z = vector_from_json(r.at("z"));
        rec.y = vector_from_json(r.at("y"));
        data.records.push_back(std::move(rec));
    }
    data.validate();
    return data;
}

TrajectoryDataset read_dataset(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        return read_dataset_json(path);
    return read_dataset_csv(path);
}

void write_predictor_json(const MultiStepPredictor& pred, const std::string& path) {
    pred.validate();
    json doc;
    doc["schema"] = "drmpc-predictor-v1";
    doc["n"] = pred.n;
    doc["m"] = pred.m;
    doc["T"] = pred.T;
    doc["N"] = pred.sample_count();
    doc["causal"] = pred.causal;
    doc["L_hat"] = matrix_to_json(pred.L_hat);
    json residuals = json::array(), anchors = json::array();
    for (const auto& r : pred.residuals) residuals.push_back(vector_to_json(r));
    for (const auto& a : pred.anchors) anchors.push_back(vector_to_json(a));
    doc["residuals"] = std::move(residuals);
    doc["anchors"] = std::move(anchors);
    write_text_file(path, doc.dump(2) + "\n");
}

MultiStepPredictor read_predictor_json(const std::string& path) {
    const json doc = json::parse(read_text_file(path));
    MultiStepPredictor pred;
    pred.n = doc.at("n");
    pred.m = doc.at("m");
    pred.T = doc.at("T");
    pred.causal = doc.at("causal");
    pred.L_hat = matrix_from_json(doc.at("L_hat"));
    for (const auto& r : doc.at("residuals")) pred.residuals.push_back(vector_from_json(r));
    for (const auto& a : doc.at("anchors")) pred.anchors.push_back(vector_from_json(a));
    pred.validate();
    return pred;
}

void write_diagnostics_csv(const LooDiagnostics& diag, const std::string& path) {
    std::ostringstream out;
    out << "# drmpc loo-diagnostics v1\n";
    out << "index,V,E\n";
    for (Eigen::Index l = 0; l < diag.V.size(); ++l)
        out << l << "," << format_double(diag.V(l)) << "," << format_double(diag.E(l))
            << "\n";
    write_text_file(path, out.str());
}

namespace {

json expr_to_json(const LinearExpr& e) {
    json terms = json::array();
    for (const auto& [idx, coeff] : e.terms) terms.push_back({idx, coeff});
    return json{{"terms", std::move(terms)}, {"constant", e.constant}};
}

}  // namespace

std::string program_to_json(const ConicProgram& prog) {
    json doc;
    doc["schema"] = "drmpc-conic-v1";
    doc["variables"] = prog.variable_names();
    json obj;
    obj["constant"] = prog.objective_constant();
    json coeffs = json::array();
    for (size_t i = 0; i < prog.objective().size(); ++i)
        if (prog.objective()[i] != 0.0)
            coeffs.push_back({static_cast<int>(i), prog.objective()[i]});
    obj["terms"] = std::move(coeffs);
    doc["objective"] = std::move(obj);
    json eqs = json::array();
    for (const auto& e : prog.equalities()) eqs.push_back(expr_to_json(e));
    doc["equalities"] = std::move(eqs);  // each expr == 0
    json ineqs = json::array();
    for (const auto& e : prog.inequalities()) ineqs.push_back(expr_to_json(e));
    doc["inequalities"] = std::move(ineqs);  // each expr <= 0
    json cones = json::array();
    for (const auto& c : prog.cones()) {
        json arg = json::array();
        for (const auto& e : c.arg) arg.push_back(expr_to_json(e));
        cones.push_back(json{{"bound", c.bound_var}, {"arg", std::move(arg)}});
    }
    doc["cones"] = std::move(cones);  // x[bound] >= ||arg||_2
    return doc.dump(2) + "\n";
}

void write_program_json(const ConicProgram& prog, const std::string& path) {
    write_text_file(path, program_to_json(prog));
}

void write_run_csv(const ClosedLoopRecord& record, const std::string& path) {
    std::ostringstream out;
    out << "# drmpc run v1\n";
    out << "step";
    if (!record.steps.empty()) {
        for (Eigen::Index j = 0; j < record.steps[0].state.size(); ++j) out << ",x" << j;
        for (Eigen::Index j = 0; j < record.steps[0].input.size(); ++j) out << ",u" << j;
    }
    out << ",status,objective,slack,stage_cost,violated,fallback\n";
    for (size_t tau = 0; tau < record.steps.size(); ++tau) {
        const auto& step = record.steps[tau];
        out << tau;
        for (Eigen::Index j = 0; j < step.state.size(); ++j)
            out << "," << format_double(step.state(j));
        for (Eigen::Index j = 0; j < step.input.size(); ++j)
            out << "," << format_double(step.input(j));
        out << "," << to_string(step.status) << "," << format_double(step.objective)
            << "," << format_double(step.slack) << "," << format_double(step.stage_cost)
            << "," << (step.violated() ? 1 : 0) << "," << (step.fallback ? 1 : 0) << "\n";
    }
    out << "# total_cost=" << format_double(record.total_cost)
        << " violations=" << record.violation_count
        << " solver_failures=" << record.solver_failures
        << " slack_total=" << format_double(record.slack_total) << "\n";
    write_text_file(path, out.str());
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "# drmpc sweep v1\n";
    out << "eps1,eps2,cost,violations,solver_failures,slack_total\n";
    for (const auto& row : rows)
        out << format_double(row.eps1) << "," << format_double(row.eps2) << ","
            << format_double(row.cost) << "," << row.violations << ","
            << row.solver_failures << "," << format_double(row.slack_total) << "\n";
    write_text_file(path, out.str());
}

void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "# drmpc compare v1\n";
    out << "N,repetition,method,cost,violations,solver_failures,dataset_seed,noise_seed\n";
    for (const auto& row : rows)
        out << row.N << "," << row.repetition << "," << row.method << ","
            << format_double(row.cost) << "," << row.violations << ","
            << row.solver_failures << "," << row.dataset_seed << "," << row.noise_seed
            << "\n";
    write_text_file(path, out.str());
}

namespace {

DisturbanceSpec spec_from_json(const json& j) {
    if (j.is_string()) return DisturbanceSpec::parse(j.get<std::string>());
    DisturbanceSpec spec;
    const std::string kind = j.at("kind");
    if (kind == "zero") return DisturbanceSpec::zero();
    const double scale = j.at("scale");
    if (kind == "gaussian") return DisturbanceSpec::gaussian(scale);
    if (kind == "uniform_box") return DisturbanceSpec::uniform_box(scale);
    throw std::runtime_error("config: unknown disturbance kind " + kind);
}

json spec_to_json(const DisturbanceSpec& spec) {
    switch (spec.kind) {
        case DisturbanceSpec::Kind::zero: return json{{"kind", "zero"}};
        case DisturbanceSpec::Kind::gaussian:
            return json{{"kind", "gaussian"}, {"scale", spec.scale}};
        case DisturbanceSpec::Kind::uniform_box:
            return json{{"kind", "uniform_box"}, {"scale", spec.scale}};
    }
    return json{{"kind", "zero"}};
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    const json doc = json::parse(json_text);
    ExperimentConfig cfg;

    const json& sys = doc.at("system");
    cfg.system.A = matrix_from_json(sys.at("A"));
    cfg.system.B = matrix_from_json(sys.at("B"));
    if (sys.contains("noise")) cfg.system.noise = spec_from_json(sys.at("noise"));

    if (doc.contains("data")) {
        const json& d = doc.at("data");
        cfg.N = d.value("N", cfg.N);
        cfg.T = d.value("T", cfg.T);
        cfg.dataset_seed = d.value("seed", cfg.dataset_seed);
        if (d.contains("input")) cfg.input_spec = spec_from_json(d.at("input"));
        if (d.contains("init")) cfg.init_spec = spec_from_json(d.at("init"));
    }

    if (doc.contains("controller")) {
        const json& c = doc.at("controller");
        cfg.beta = c.value("beta", cfg.beta);
        cfg.slack_weight = c.value("slack_weight", cfg.slack_weight);
        cfg.track_coord = c.value("track_coord", cfg.track_coord);
        cfg.track_ref = c.value("track_ref", cfg.track_ref);
        if (c.contains("state_bounds")) {
            cfg.state_bounds.clear();
            for (const auto& sb : c.at("state_bounds"))
                cfg.state_bounds.push_back(StateBound{
                    sb.at("coord"), sb.at("bound"), sb.at("sense") == "upper"});
        }
        if (c.contains("radius")) {
            const json& r = c.at("radius");
            cfg.radius_source = radius_source_from_string(r.value("source", "algorithm1"));
            cfg.fixed_radius.eps1 = r.value("eps1", 0.0);
            cfg.fixed_radius.eps2 = r.value("eps2", 0.0);
            if (r.contains("guarantee")) {
                const json& g = r.at("guarantee");
                cfg.guarantee.alpha = g.value("alpha", 0.05);
                cfg.guarantee.c1 = g.value("c1", 1.0);
                cfg.guarantee.c2 = g.value("c2", 1.0);
                cfg.guarantee.a = g.value("a", 2.0);
                cfg.guarantee.b = g.value("b", 1.0);
                const double gamma_const = g.value("gamma", 0.0);
                cfg.guarantee.gamma_of_alpha = [gamma_const](double) {
                    return gamma_const;
                };
            }
            cfg.use_loo_average_predictor =
                r.value("use_loo_average_predictor", cfg.use_loo_average_predictor);
        }
        if (c.contains("input_bounds")) {
            const json& ib = c.at("input_bounds");
            if (ib.contains("lower")) cfg.input_bounds.lower = vector_from_json(ib.at("lower"));
            if (ib.contains("upper")) cfg.input_bounds.upper = vector_from_json(ib.at("upper"));
        }
    }

    if (doc.contains("experiment")) {
        const json& e = doc.at("experiment");
        cfg.horizon = e.value("horizon", cfg.horizon);
        cfg.noise_seed = e.value("noise_seed", cfg.noise_seed);
        cfg.repetitions = e.value("repetitions", cfg.repetitions);
        cfg.tol_v = e.value("tol_v", cfg.tol_v);
        cfg.threads = e.value("threads", cfg.threads);
        if (e.contains("x0")) cfg.x0 = vector_from_json(e.at("x0"));
        if (e.contains("N_list")) cfg.N_list = e.at("N_list").get<std::vector<int>>();
        if (e.contains("grid_eps1"))
            cfg.grid_eps1 = e.at("grid_eps1").get<std::vector<double>>();
        if (e.contains("grid_eps2"))
            cfg.grid_eps2 = e.at("grid_eps2").get<std::vector<double>>();
    }

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        cfg.solver.feastol = s.value("feastol", cfg.solver.feastol);
        cfg.solver.abstol = s.value("abstol", cfg.solver.abstol);
        cfg.solver.reltol = s.value("reltol", cfg.solver.reltol);
        cfg.solver.max_iterations = s.value("max_iterations", cfg.solver.max_iterations);
    }

    cfg.validate();
    return cfg;
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["system"] = {{"A", matrix_to_json(cfg.system.A)},
                     {"B", matrix_to_json(cfg.system.B)},
                     {"noise", spec_to_json(cfg.system.noise)}};
    doc["data"] = {{"N", cfg.N},
                   {"T", cfg.T},
                   {"seed", cfg.dataset_seed},
                   {"input", spec_to_json(cfg.input_spec)},
                   {"init", spec_to_json(cfg.init_spec)}};
    json bounds = json::array();
    for (const auto& sb : cfg.state_bounds)
        bounds.push_back(json{{"coord", sb.coord},
                              {"bound", sb.bound},
                              {"sense", sb.upper ? "upper" : "lower"}});
    json radius = {{"source", to_string(cfg.radius_source)},
                   {"eps1", cfg.fixed_radius.eps1},
                   {"eps2", cfg.fixed_radius.eps2},
                   {"use_loo_average_predictor", cfg.use_loo_average_predictor}};
    if (cfg.radius_source == RadiusSource::theoretical && cfg.guarantee.gamma_of_alpha) {
        radius["guarantee"] = {{"alpha", cfg.guarantee.alpha},
                               {"c1", cfg.guarantee.c1},
                               {"c2", cfg.guarantee.c2},
                               {"a", cfg.guarantee.a},
                               {"b", cfg.guarantee.b},
                               {"gamma", cfg.guarantee.gamma_of_alpha(cfg.guarantee.alpha)}};
    }
    doc["controller"] = {{"beta", cfg.beta},
                         {"slack_weight", cfg.slack_weight},
                         {"track_coord", cfg.track_coord},
                         {"track_ref", cfg.track_ref},
                         {"state_bounds", std::move(bounds)},
                         {"radius", std::move(radius)}};
    if (cfg.input_bounds.lower.size() > 0 || cfg.input_bounds.upper.size() > 0) {
        json ib;
        if (cfg.input_bounds.lower.size() > 0)
            ib["lower"] = vector_to_json(cfg.input_bounds.lower);
        if (cfg.input_bounds.upper.size() > 0)
            ib["upper"] = vector_to_json(cfg.input_bounds.upper);
        doc["controller"]["input_bounds"] = std::move(ib);
    }
    doc["experiment"] = {{"horizon", cfg.horizon},
                         {"noise_seed", cfg.noise_seed},
                         {"repetitions", cfg.repetitions},
                         {"tol_v", cfg.tol_v},
                         {"threads", cfg.threads},
                         {"x0", vector_to_json(cfg.initial_state())},
                         {"N_list", cfg.N_list},
                         {"grid_eps1", cfg.grid_eps1},
                         {"grid_eps2", cfg.grid_eps2}};
    doc["solver"] = {{"feastol", cfg.solver.feastol},
                     {"abstol", cfg.solver.abstol},
                     {"reltol", cfg.solver.reltol},
                     {"max_iterations", cfg.solver.max_iterations}};
    return doc.dump(2) + "\n";
}

}  // namespace drmpc
