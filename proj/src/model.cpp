#include "poirec/model.hpp"

#include <cmath>
#include <stdexcept>

#include "poirec/common.hpp"

namespace poirec {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("model config: " + what);
}

void init_uniform(nn::Parameter& p, Rng& rng, double fan_in) {
    const double s = 1.0 / std::sqrt(fan_in);
    for (std::int64_t i = 0; i < p.value.numel(); ++i) p.value[i] = rng.uniform(-s, s);
}

void init_normal(nn::Parameter& p, Rng& rng, double stddev) {
    for (std::int64_t i = 0; i < p.value.numel(); ++i) p.value[i] = rng.normal(0.0, stddev);
}

}  // namespace

void ModelConfig::validate() const {
    require(user_dim >= 1, "user_dim must be >= 1");
    require(timecat_dim >= 1, "timecat_dim must be >= 1");
    require(model_dim == 2 * user_dim + 2 * timecat_dim,
            "model_dim must equal 2*user_dim + 2*timecat_dim");
    require(heads >= 1, "heads must be >= 1");
    require(model_dim % heads == 0, "heads must divide model_dim");
    require(layers >= 1, "layers must be >= 1");
    require(n_features >= 1, "n_features must be >= 1");
    require(n_pois >= 1, "n_pois must be >= 1");
    require(n_users >= 1, "n_users must be >= 1");
    require(n_categories >= 1, "n_categories must be >= 1");
    require(max_seq_len >= 1, "max_seq_len must be >= 1");
    for (std::int64_t w : gcn_hidden) require(w >= 1, "gcn_hidden widths must be >= 1");
    require(std::isfinite(leaky_slope) && leaky_slope >= 0.0,
            "leaky_slope must be finite and >= 0");
}

GetNextModel::GetNextModel(const ModelConfig& config) : config_(config) {
    config_.validate();
    const std::int64_t omega = config_.user_dim;
    const std::int64_t psi = config_.timecat_dim;
    const std::int64_t d = config_.model_dim;

    user_table = nn::Parameter("user_table", nn::Tensor(config_.n_users, omega));
    category_table = nn::Parameter("category_table", nn::Tensor(config_.n_categories, psi));
    t2v_omega = nn::Parameter("t2v_omega", nn::Tensor(1, psi));
    t2v_phi = nn::Parameter("t2v_phi", nn::Tensor(1, psi));

    std::vector<std::int64_t> widths;
    widths.push_back(config_.n_features);
    for (std::int64_t w : config_.gcn_hidden) widths.push_back(w);
    widths.push_back(omega);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        gcn_weights.emplace_back("gcn_w" + std::to_string(l),
                                 nn::Tensor(widths[l], widths[l + 1]));
    }

    fusion_pu_w = nn::Parameter("fusion_pu_w", nn::Tensor(2 * omega, 2 * omega));
    fusion_pu_b = nn::Parameter("fusion_pu_b", nn::Tensor(2 * omega, 1));
    fusion_ct_w = nn::Parameter("fusion_ct_w", nn::Tensor(2 * psi, 2 * psi));
    fusion_ct_b = nn::Parameter("fusion_ct_b", nn::Tensor(2 * psi, 1));

    encoder_layers.resize(static_cast<std::size_t>(config_.layers));
    for (std::int64_t l = 0; l < config_.layers; ++l) {
        EncoderLayerParams& e = encoder_layers[static_cast<std::size_t>(l)];
        const std::string p = "enc" + std::to_string(l) + "_";
        e.w_q = nn::Parameter(p + "wq", nn::Tensor(d, d));
        e.w_k = nn::Parameter(p + "wk", nn::Tensor(d, d));
        e.w_v = nn::Parameter(p + "wv", nn::Tensor(d, d));
        e.w_o = nn::Parameter(p + "wo", nn::Tensor(d, d));
        e.ln1_gain = nn::Parameter(p + "ln1_gain", nn::Tensor(1, d));
        e.ln1_bias = nn::Parameter(p + "ln1_bias", nn::Tensor(1, d));
        e.ffn_w1 = nn::Parameter(p + "ffn_w1", nn::Tensor(d, d));
        e.ffn_b1 = nn::Parameter(p + "ffn_b1", nn::Tensor(1, d));
        e.ffn_w2 = nn::Parameter(p + "ffn_w2", nn::Tensor(d, d));
        e.ffn_b2 = nn::Parameter(p + "ffn_b2", nn::Tensor(1, d));
        e.ln2_gain = nn::Parameter(p + "ln2_gain", nn::Tensor(1, d));
        e.ln2_bias = nn::Parameter(p + "ln2_bias", nn::Tensor(1, d));
    }

    head_poi_w = nn::Parameter("head_poi_w", nn::Tensor(d, config_.n_pois));
    head_poi_b = nn::Parameter("head_poi_b", nn::Tensor(1, config_.n_pois));
    head_time_w = nn::Parameter("head_time_w", nn::Tensor(d, 1));
    head_time_b = nn::Parameter("head_time_b", nn::Tensor(1, 1));
    head_cat_w = nn::Parameter("head_cat_w", nn::Tensor(d, config_.n_categories));
    head_cat_b = nn::Parameter("head_cat_b", nn::Tensor(1, config_.n_categories));

    attn_src = nn::Parameter("attn_src", nn::Tensor(config_.n_features, 1));
    attn_dst = nn::Parameter("attn_dst", nn::Tensor(config_.n_features, 1));
}

void GetNextModel::init_parameters(std::uint64_t seed) {
    Rng rng(seed);
    const std::int64_t psi = config_.timecat_dim;
    const double d = static_cast<double>(config_.model_dim);

    init_normal(user_table, rng, 0.02);
    init_normal(category_table, rng, 0.02);

    // Frequencies log-spaced over [1, 2*pi*7] so the periodic components span
    // sub-daily up to weekly-scale oscillations of the day fraction.
    const double lo = std::log(1.0);
    const double hi = std::log(2.0 * M_PI * 7.0);
    for (std::int64_t i = 0; i < psi; ++i) {
        const double f = psi == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(psi - 1);
        t2v_omega.value[i] = std::exp(lo + (hi - lo) * f);
    }
    t2v_phi.value.fill(0.0);

    for (auto& w : gcn_weights) init_uniform(w, rng, static_cast<double>(w.value.rows()));

    init_uniform(fusion_pu_w, rng, static_cast<double>(fusion_pu_w.value.rows()));
    fusion_pu_b.value.fill(0.0);
    init_uniform(fusion_ct_w, rng, static_cast<double>(fusion_ct_w.value.rows()));
    fusion_ct_b.value.fill(0.0);

    for (auto& e : encoder_layers) {
        init_uniform(e.w_q, rng, d);
        init_uniform(e.w_k, rng, d);
        init_uniform(e.w_v, rng, d);
        init_uniform(e.w_o, rng, d);
        e.ln1_gain.value.fill(1.0);
        e.ln1_bias.value.fill(0.0);
        init_uniform(e.ffn_w1, rng, d);
        e.ffn_b1.value.fill(0.0);
        init_uniform(e.ffn_w2, rng, d);
        e.ffn_b2.value.fill(0.0);
        e.ln2_gain.value.fill(1.0);
        e.ln2_bias.value.fill(0.0);
    }

    init_uniform(head_poi_w, rng, d);
    head_poi_b.value.fill(0.0);
    init_uniform(head_time_w, rng, d);
    head_time_b.value.fill(0.0);
    init_uniform(head_cat_w, rng, d);
    head_cat_b.value.fill(0.0);

    init_uniform(attn_src, rng, static_cast<double>(config_.n_features));
    init_uniform(attn_dst, rng, static_cast<double>(config_.n_features));

    for (nn::Parameter* p : parameters()) p->zero_grad();
}

std::vector<nn::Parameter*> GetNextModel::parameters() {
    std::vector<nn::Parameter*> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, nn::Parameter*>> GetNextModel::named_parameters() {
    std::vector<std::pair<std::string, nn::Parameter*>> out;
    auto push = [&out](nn::Parameter& p) { out.emplace_back(p.name, &p); };
    push(user_table);
    push(category_table);
    push(t2v_omega);
    push(t2v_phi);
    for (auto& w : gcn_weights) push(w);
    push(fusion_pu_w);
    push(fusion_pu_b);
    push(fusion_ct_w);
    push(fusion_ct_b);
    for (auto& e : encoder_layers) {
        push(e.w_q);
        push(e.w_k);
        push(e.w_v);
        push(e.w_o);
        push(e.ln1_gain);
        push(e.ln1_bias);
        push(e.ffn_w1);
        push(e.ffn_b1);
        push(e.ffn_w2);
        push(e.ffn_b2);
        push(e.ln2_gain);
        push(e.ln2_bias);
    }
    push(head_poi_w);
    push(head_poi_b);
    push(head_time_w);
    push(head_time_b);
    push(head_cat_w);
    push(head_cat_b);
    push(attn_src);
    push(attn_dst);
    return out;
}

std::int64_t GetNextModel::parameter_count() const {
    std::int64_t n = 0;
    auto& self = const_cast<GetNextModel&>(*this);
    for (nn::Parameter* p : self.parameters()) n += p->value.numel();
    return n;
}

nn::Tensor sinusoidal_positional_encoding(std::int64_t k, std::int64_t d) {
    nn::Tensor pe(k, d);
    for (std::int64_t pos = 0; pos < k; ++pos) {
        for (std::int64_t c = 0; c < d; ++c) {
            const double exponent = static_cast<double>(2 * (c / 2)) / static_cast<double>(d);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            pe.at(pos, c) = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

nn::Tensor causal_attention_mask(std::int64_t k) {
    nn::Tensor mask(k, k);
    for (std::int64_t i = 0; i < k; ++i)
        for (std::int64_t j = 0; j <= i; ++j) mask.at(i, j) = 1.0;
    return mask;
}

nn::Var gcn_forward(nn::Tape& tape, const FeatureMatrix& features,
                    const NormalizedAdjacency& adj, GetNextModel& model) {
    const ModelConfig& cfg = model.config();
    if (features.values.rows() != cfg.n_pois || features.values.cols() != cfg.n_features) {
        throw ShapeError("gcn features " + features.values.shape_str() + " do not match config [" +
                         std::to_string(cfg.n_pois) + "," + std::to_string(cfg.n_features) + "]");
    }
    if (adj.values.rows() != cfg.n_pois || adj.values.cols() != cfg.n_pois) {
        throw ShapeError("gcn adjacency " + adj.values.shape_str() + " is not N x N");
    }
    nn::Var a = tape.constant(adj.values);
    nn::Var h = tape.constant(features.values);
    const std::size_t n_layers = model.gcn_weights.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        h = tape.matmul(a, tape.matmul(h, tape.param(model.gcn_weights[l])));
        if (l + 1 < n_layers) h = tape.leaky_relu(h, cfg.leaky_slope);
    }
    return h;
}

nn::Var time2vec(nn::Tape& tape, double t, GetNextModel& model) {
    if (!(t >= 0.0 && t < 1.0)) {
        throw DomainError("time-of-day fraction " + std::to_string(t) + " outside [0, 1)");
    }
    nn::Var z = tape.add(tape.scale(tape.param(model.t2v_omega), t), tape.param(model.t2v_phi));
    const std::int64_t psi = model.config().timecat_dim;
    nn::Var row = tape.slice_cols(z, 0, 1);
    if (psi > 1) row = tape.concat(row, tape.sin(tape.slice_cols(z, 1, psi)), 1);
    return tape.transpose(row);
}

nn::Var time2vec_rows(nn::Tape& tape, const std::vector<double>& times, GetNextModel& model) {
    for (double t : times) {
        if (!(t >= 0.0 && t < 1.0)) {
            throw DomainError("time-of-day fraction " + std::to_string(t) + " outside [0, 1)");
        }
    }
    const std::int64_t k = static_cast<std::int64_t>(times.size());
    const std::int64_t psi = model.config().timecat_dim;
    nn::Tensor t_col(k, 1);
    for (std::int64_t i = 0; i < k; ++i) t_col.at(i, 0) = times[static_cast<std::size_t>(i)];
    nn::Var z = tape.add_row(tape.matmul(tape.constant(t_col), tape.param(model.t2v_omega)),
                             tape.param(model.t2v_phi));
    nn::Var block = tape.slice_cols(z, 0, 1);
    if (psi > 1) block = tape.concat(block, tape.sin(tape.slice_cols(z, 1, psi)), 1);
    return block;
}

namespace {

// Column-vector fusion: leaky_relu(w [a ; b] + bias).
nn::Var fuse_columns(nn::Tape& tape, nn::Var a, nn::Var b, nn::Parameter& w, nn::Parameter& bias,
                     double slope) {
    nn::Var cat = tape.concat(a, b, 0);
    return tape.leaky_relu(tape.add(tape.matmul(tape.param(w), cat), tape.param(bias)), slope);
}

// Row-wise fusion of a whole sequence: leaky_relu([A B] w^T + bias^T).
nn::Var fuse_rows(nn::Tape& tape, nn::Var a_rows, nn::Var b_rows, nn::Parameter& w,
                  nn::Parameter& bias, double slope) {
    nn::Var cat = tape.concat(a_rows, b_rows, 1);
    nn::Var lin = tape.add_row(tape.matmul(cat, tape.transpose(tape.param(w))),
                               tape.transpose(tape.param(bias)));
    return tape.leaky_relu(lin, slope);
}

}  // namespace

nn::Var fuse_poi_user(nn::Tape& tape, nn::Var e_poi, nn::Var e_user, GetNextModel& model) {
    return fuse_columns(tape, e_poi, e_user, model.fusion_pu_w, model.fusion_pu_b,
                        model.config().leaky_slope);
}

nn::Var fuse_time_category(nn::Tape& tape, nn::Var e_time, nn::Var e_cat, GetNextModel& model) {
    return fuse_columns(tape, e_time, e_cat, model.fusion_ct_w, model.fusion_ct_b,
                        model.config().leaky_slope);
}

nn::Var checkin_embedding(nn::Tape& tape, const CheckIn& checkin, std::int64_t category,
                          GetNextModel& model, nn::Var poi_embeddings) {
    nn::Var e_p = tape.transpose(tape.gather_rows(poi_embeddings, {checkin.poi}));
    nn::Var e_u = tape.transpose(tape.gather_rows(tape.param(model.user_table), {checkin.user}));
    nn::Var pu = fuse_poi_user(tape, e_p, e_u, model);
    nn::Var e_t = time2vec(tape, checkin.local_tod, model);
    nn::Var e_c = tape.transpose(tape.gather_rows(tape.param(model.category_table), {category}));
    nn::Var ct = fuse_time_category(tape, e_t, e_c, model);
    return tape.concat(pu, ct, 0);
}

nn::Var transition_attention(nn::Tape& tape, const FeatureMatrix& features, const FlowMap& fm,
                             GetNextModel& model) {
    const std::int64_t n = fm.n_nodes;
    if (features.values.rows() != n) {
        throw ShapeError("transition features " + features.values.shape_str() +
                         " do not cover " + std::to_string(n) + " nodes");
    }
    nn::Var x = tape.constant(features.values);
    nn::Var u = tape.matmul(x, tape.param(model.attn_src));  // [N x 1]
    nn::Var v = tape.matmul(x, tape.param(model.attn_dst));  // [N x 1]
    nn::Var scores = tape.add(tape.matmul(u, tape.constant(nn::Tensor::full(1, n, 1.0))),
                              tape.matmul(tape.constant(nn::Tensor::full(n, 1, 1.0)),
                                          tape.transpose(v)));
    scores = tape.leaky_relu(scores, model.config().leaky_slope);

    nn::Tensor edge_mask(n, n);
    std::vector<bool> has_out(static_cast<std::size_t>(n), false);
    for (const auto& [edge, w] : fm.edges) {
        (void)w;
        edge_mask.at(edge.first, edge.second) = 1.0;
        has_out[static_cast<std::size_t>(edge.first)] = true;
    }
    // Sink rows get a placeholder full mask so the softmax stays defined, then
    // the whole row is swapped for the uniform fallback.
    for (std::int64_t i = 0; i < n; ++i) {
        if (has_out[static_cast<std::size_t>(i)]) continue;
        for (std::int64_t j = 0; j < n; ++j) edge_mask.at(i, j) = 1.0;
    }
    nn::Var soft = tape.softmax_rows(scores, &edge_mask);
    nn::Var uniform = tape.constant(nn::Tensor::full(n, n, 1.0 / static_cast<double>(n)));
    return tape.select_rows(has_out, soft, uniform);
}

TransitionAttentionMap transition_attention_map(const FeatureMatrix& features, const FlowMap& fm,
                                                GetNextModel& model) {
    nn::Tape tape;
    nn::Var phi = transition_attention(tape, features, fm, model);
    return TransitionAttentionMap{tape.value(phi)};
}

nn::Var encoder_forward(nn::Tape& tape, nn::Var x0, GetNextModel& model,
                        const nn::Tensor& attn_mask) {
    const ModelConfig& cfg = model.config();
    const std::int64_t k = tape.value(x0).rows();
    const std::int64_t d = cfg.model_dim;
    if (tape.value(x0).cols() != d) {
        throw ShapeError("encoder input " + tape.value(x0).shape_str() + " width != model_dim");
    }
    if (k > cfg.max_seq_len) {
        throw ShapeError("sequence length " + std::to_string(k) + " exceeds max_seq_len " +
                         std::to_string(cfg.max_seq_len));
    }
    if (attn_mask.rows() != k || attn_mask.cols() != k) {
        throw ShapeError("attention mask " + attn_mask.shape_str() + " is not k x k");
    }

    nn::Var x = tape.add(x0, tape.constant(sinusoidal_positional_encoding(k, d)));
    const std::int64_t head_width = d / cfg.heads;
    const double scale = cfg.unscaled_attention
                             ? 1.0
                             : 1.0 / std::sqrt(static_cast<double>(head_width));
    for (auto& layer : model.encoder_layers) {
        nn::Var q = tape.matmul(x, tape.param(layer.w_q));
        nn::Var key = tape.matmul(x, tape.param(layer.w_k));
        nn::Var s = tape.matmul(q, tape.transpose(key));
        if (scale != 1.0) s = tape.scale(s, scale);
        nn::Var attn = tape.softmax_rows(s, &attn_mask);

        nn::Var v_full = tape.matmul(x, tape.param(layer.w_v));
        nn::Var heads_cat;
        for (std::int64_t hd = 0; hd < cfg.heads; ++hd) {
            nn::Var head = tape.matmul(
                attn, tape.slice_cols(v_full, hd * head_width, (hd + 1) * head_width));
            heads_cat = hd == 0 ? head : tape.concat(heads_cat, head, 1);
        }
        nn::Var attn_out = tape.matmul(heads_cat, tape.param(layer.w_o));
        x = tape.layer_norm(tape.add(x, attn_out), tape.param(layer.ln1_gain),
                            tape.param(layer.ln1_bias));

        nn::Var hidden = tape.relu(
            tape.add_row(tape.matmul(x, tape.param(layer.ffn_w1)), tape.param(layer.ffn_b1)));
        nn::Var ffn = tape.add_row(tape.matmul(hidden, tape.param(layer.ffn_w2)),
                                   tape.param(layer.ffn_b2));
        x = tape.layer_norm(tape.add(x, ffn), tape.param(layer.ln2_gain),
                            tape.param(layer.ln2_bias));
    }
    return x;
}

HeadOutputs heads_forward(nn::Tape& tape, nn::Var encoded, GetNextModel& model) {
    HeadOutputs out;
    out.poi_logits = tape.add_row(tape.matmul(encoded, tape.param(model.head_poi_w)),
                                  tape.param(model.head_poi_b));
    out.time_pred = tape.add_row(tape.matmul(encoded, tape.param(model.head_time_w)),
                                 tape.param(model.head_time_b));
    out.cat_logits = tape.add_row(tape.matmul(encoded, tape.param(model.head_cat_w)),
                                  tape.param(model.head_cat_b));
    return out;
}

nn::Var final_poi_logits(nn::Tape& tape, nn::Var poi_logits, nn::Var phi,
                         const std::vector<std::int64_t>& input_pois) {
    if (static_cast<std::int64_t>(input_pois.size()) != tape.value(poi_logits).rows()) {
        throw ShapeError("input_pois length != logits rows");
    }
    return tape.add(poi_logits, tape.gather_rows(phi, input_pois));
}

nn::Var combined_loss(nn::Tape& tape, nn::Var final_logits, nn::Var time_pred,
                      nn::Var cat_logits, const SequenceTargets& targets) {
    nn::Var l_poi = tape.cross_entropy_masked(final_logits, targets.poi, targets.mask);
    nn::Var l_time = tape.mse_masked(time_pred, targets.time, targets.mask);
    nn::Var l_cat = tape.cross_entropy_masked(cat_logits, targets.category, targets.mask);
    return tape.add(tape.add(l_poi, tape.scale(l_time, 10.0)), l_cat);
}

std::int64_t SequenceExample::n_valid() const {
    std::int64_t n = 0;
    for (double m : targets.mask) n += (m != 0.0) ? 1 : 0;
    return n;
}

namespace {

void check_example(const SequenceExample& ex) {
    const std::size_t k = ex.input_pois.size();
    if (k == 0) throw ShapeError("sequence example is empty");
    if (ex.input_categories.size() != k || ex.input_times.size() != k ||
        ex.targets.poi.size() != k || ex.targets.category.size() != k ||
        ex.targets.time.size() != k || ex.targets.mask.size() != k) {
        throw ShapeError("sequence example field lengths disagree");
    }
}

}  // namespace

nn::Var sequence_logits(nn::Tape& tape, const SequenceExample& ex, GetNextModel& model,
                        nn::Var poi_embeddings, nn::Var phi, HeadOutputs* heads_out) {
    check_example(ex);
    const ModelConfig& cfg = model.config();
    const std::int64_t k = ex.length();

    nn::Var e_poi = tape.gather_rows(poi_embeddings, ex.input_pois);
    nn::Var e_user = tape.gather_rows(
        tape.param(model.user_table),
        std::vector<std::int64_t>(static_cast<std::size_t>(k), ex.user));
    nn::Var pu = fuse_rows(tape, e_poi, e_user, model.fusion_pu_w, model.fusion_pu_b,
                           cfg.leaky_slope);

    nn::Var e_time = time2vec_rows(tape, ex.input_times, model);
    nn::Var e_cat = tape.gather_rows(tape.param(model.category_table), ex.input_categories);
    nn::Var ct = fuse_rows(tape, e_time, e_cat, model.fusion_ct_w, model.fusion_ct_b,
                           cfg.leaky_slope);

    nn::Var x0 = tape.concat(pu, ct, 1);
    nn::Var encoded = encoder_forward(tape, x0, model, causal_attention_mask(k));
    HeadOutputs heads = heads_forward(tape, encoded, model);
    if (heads_out != nullptr) *heads_out = heads;
    return final_poi_logits(tape, heads.poi_logits, phi, ex.input_pois);
}

nn::Var sequence_loss(nn::Tape& tape, const SequenceExample& ex, GetNextModel& model,
                      nn::Var poi_embeddings, nn::Var phi) {
    HeadOutputs heads;
    nn::Var logits = sequence_logits(tape, ex, model, poi_embeddings, phi, &heads);
    return combined_loss(tape, logits, heads.time_pred, heads.cat_logits, ex.targets);
}

nn::Var batch_loss(nn::Tape& tape, const std::vector<SequenceExample>& batch,
                   GetNextModel& model, nn::Var poi_embeddings, nn::Var phi) {
    if (batch.empty()) throw DomainError("batch is empty");
    std::int64_t total_valid = 0;
    for (const auto& ex : batch) total_valid += ex.n_valid();
    if (total_valid == 0) throw DomainError("batch has no supervised positions");

    // Per-member masked means recombined by valid count: the result is the
    // plain mean over every supervised position in the batch.
    nn::Var total;
    bool first = true;
    for (const auto& ex : batch) {
        const std::int64_t n = ex.n_valid();
        if (n == 0) continue;
        nn::Var weighted = tape.scale(sequence_loss(tape, ex, model, poi_embeddings, phi),
                                      static_cast<double>(n) / static_cast<double>(total_valid));
        total = first ? weighted : tape.add(total, weighted);
        first = false;
    }
    return total;
}

}  // namespace poirec
