#include "cpekit/json_io.hpp"

#include "cpekit/errors.hpp"

namespace cpekit {

Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw InputError("matrix JSON must be an array of rows");
    const auto rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw InputError("matrix JSON rows must be arrays of equal length");
        for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Json to_json(const RankReport& r) {
    return {{"numeric_rank", r.numeric_rank},
            {"singular_values", vector_to_json(r.singular_values)},
            {"tolerance_used", r.tolerance_used}};
}

Json to_json(const CpeReport& r) {
    Json pe = Json::array();
    for (bool b : r.per_member_pe) pe.push_back(b);
    return {{"mode", r.mode.name()},
            {"order_L", r.order_L},
            {"required_rank", r.required_rank},
            {"verdict", r.verdict},
            {"rank", to_json(r.rank_report)},
            {"per_member_pe", pe},
            {"alpha_policy", r.alpha_policy.describe()},
            {"trials_run", r.trials_run},
            {"weights_used", r.weights_used},
            {"conditioning_score", r.conditioning_score}};
}

Json to_json(const RankConditionReport& r) {
    return {{"mode", r.mode.name()},
            {"order_L", r.order_L},
            {"expected_rank", r.expected_rank},
            {"verdict", r.verdict},
            {"rank", to_json(r.rank_report)},
            {"conditioning_score", r.conditioning_score}};
}

Json to_json(const TransformationReport& r) {
    return {{"mcpe", to_string(r.mcpe_holds)},
            {"ccpe", to_string(r.ccpe_holds)},
            {"hcpe", to_string(r.hcpe_holds)},
            {"kernel_condition_1", to_string(r.kernel_condition_1)},
            {"kernel_condition_2", to_string(r.kernel_condition_2)},
            {"kernel_condition_3", to_string(r.kernel_condition_3)},
            {"intersection_dims", {r.intersection_dim_1, r.intersection_dim_2, r.intersection_dim_3}},
            {"violations", r.violations},
            {"consistent", r.consistent()}};
}

Json to_json(const LengthBound& b) {
    return {{"inequality", b.inequality}, {"required", b.required}, {"achieved", b.achieved}, {"satisfied", b.satisfied}};
}

Json to_json(const DesignLedger& l) {
    Json order = Json::array();
    for (const auto& [member, time] : l.construction_order) order.push_back({member, time});
    Json bases = Json::array();
    for (const auto& z : l.extension_base) bases.push_back(to_json(z));
    Json coefs = Json::array();
    for (const auto& w : l.extension_coefficients) coefs.push_back(vector_to_json(w));
    return {{"recipe", l.recipe},
            {"diagonal_indices", l.diagonal_indices},
            {"offsets", l.offsets},
            {"diagonal_vectors", to_json(l.diagonal_vectors)},
            {"extension_base", bases},
            {"extension_coefficients", coefs},
            {"construction_order", order},
            {"notes", l.notes},
            {"resamples", l.resamples}};
}

Json to_json(const LsResult& r) {
    return {{"g_hat", to_json(r.g_hat)}, {"unique", r.unique},   {"residual", r.residual},
            {"rank", to_json(r.rank_report)}, {"mode", r.mode.name()}, {"warning", r.warning}};
}

Json to_json(const LmiCertificate& c) {
    return {{"status", to_string(c.status)},
            {"feasible", c.feasible},
            {"min_eig_achieved", c.min_eig_achieved},
            {"relative_margin", c.relative_margin},
            {"dual_bound", c.dual_bound},
            {"iterations", c.iterations},
            {"message", c.message}};
}

Json to_json(const GainSynthesisResult& g, CompositionMode mode, const std::vector<double>& weights) {
    Json j = {{"success", g.success},
              {"K", to_json(g.k)},
              {"Q", to_json(g.q)},
              {"P", to_json(g.p)},
              {"radius", g.closed_loop_radius ? Json(*g.closed_loop_radius) : Json(nullptr)},
              {"mode", mode.name()},
              {"weights", weights},
              {"informative", g.informative},
              {"data_rank", to_json(g.data_rank)},
              {"certificate", to_json(g.certificate)},
              {"warnings", g.warnings},
              {"diagnostic", g.diagnostic}};
    return j;
}

Json to_json(const ConvergenceReport& r) {
    auto opt = [](const std::optional<bool>& b) { return b ? Json(*b) : Json(nullptr); };
    return {{"bounded", r.bounded},
            {"alpha_ok", r.alpha_ok},
            {"xi_ok", r.xi_ok},
            {"gamma_ok", opt(r.gamma_ok)},
            {"connected", opt(r.connected)},
            {"excitation_ok", r.excitation_ok},
            {"windows_checked", r.windows_checked},
            {"deficient_window", r.deficient_window},
            {"all_ok", r.all_ok()}};
}

Json to_json(const LogLinearFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"points", f.points}};
}

Json to_json(const FlopCosts& c) { return {{"pe_repeated", c.pe_repeated}, {"mcpe", c.mcpe}}; }

Json to_json(const RankBenchReport& r) {
    Json rows = Json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"mode", row.mode},
                        {"rows", row.rows},
                        {"cols", row.cols},
                        {"median_seconds", row.median_seconds},
                        {"spread_seconds", row.spread_seconds},
                        {"batch", row.batch},
                        {"samples", row.samples}});
    return {{"rows", rows}};
}

}  // namespace cpekit
