#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "poirec/flowmap.hpp"
#include "poirec/ingest.hpp"
#include "poirec/nn/tape.hpp"
#include "poirec/nn/tensor.hpp"

namespace poirec {

// Dimensions and switches for the next-visit model. model_dim is pinned to
// 2*user_dim + 2*timecat_dim because the encoder input is the concatenation
// of the two fused blocks.
struct ModelConfig {
    std::int64_t user_dim = 4;     // POI/user embedding width
    std::int64_t timecat_dim = 4;  // time/category embedding width
    std::int64_t model_dim = 16;   // encoder width, = 2*user_dim + 2*timecat_dim
    std::int64_t heads = 2;        // attention heads, divides model_dim
    std::int64_t layers = 1;       // encoder depth
    std::vector<std::int64_t> gcn_hidden;  // hidden widths between features and user_dim
    std::int64_t n_features = 0;   // flow-map feature width (input to the first GCN layer)
    std::int64_t n_pois = 0;
    std::int64_t n_users = 0;
    std::int64_t n_categories = 0;
    std::int64_t max_seq_len = 32;  // sequences keep their most recent check-ins
    double leaky_slope = 0.2;
    bool unscaled_attention = false;  // drop the 1/sqrt(model_dim/heads) factor

    void validate() const;  // throws ConfigError
};

struct EncoderLayerParams {
    nn::Parameter w_q, w_k, w_v, w_o;
    nn::Parameter ln1_gain, ln1_bias;
    nn::Parameter ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    nn::Parameter ln2_gain, ln2_bias;
};

// Row-stochastic transition matrix over the directed flow map: row i is a
// distribution over i's out-neighbors, or uniform over all nodes when i has
// no out-edges.
struct TransitionAttentionMap {
    nn::Tensor values;  // [N x N]
};

// Owns every trainable tensor. Parameter storage is allocated once in the
// constructor and never reallocated, so Parameter* handles stay valid for the
// lifetime of the (unmoved) model.
class GetNextModel {
public:
    explicit GetNextModel(const ModelConfig& config);

    // Deterministic re-initialization of every parameter from the seed.
    void init_parameters(std::uint64_t seed);

    std::vector<nn::Parameter*> parameters();
    std::vector<std::pair<std::string, nn::Parameter*>> named_parameters();
    std::int64_t parameter_count() const;

    const ModelConfig& config() const { return config_; }

    nn::Parameter user_table;      // [M x user_dim]
    nn::Parameter category_table;  // [C x timecat_dim]
    nn::Parameter t2v_omega;       // [1 x timecat_dim] frequencies
    nn::Parameter t2v_phi;         // [1 x timecat_dim] phases
    std::vector<nn::Parameter> gcn_weights;  // [in x out] per layer
    nn::Parameter fusion_pu_w, fusion_pu_b;  // [2O x 2O], [2O x 1]
    nn::Parameter fusion_ct_w, fusion_ct_b;  // [2P x 2P], [2P x 1]
    std::vector<EncoderLayerParams> encoder_layers;
    nn::Parameter head_poi_w, head_poi_b;    // [d x N], [1 x N]
    nn::Parameter head_time_w, head_time_b;  // [d x 1], [1 x 1]
    nn::Parameter head_cat_w, head_cat_b;    // [d x C], [1 x C]
    nn::Parameter attn_src, attn_dst;        // [F x 1] transition scoring vectors

private:
    ModelConfig config_;
};

// Fixed sine/cosine position table: PE[pos, 2i] = sin(pos / 10000^(2i/d)),
// PE[pos, 2i+1] = cos of the same argument.
nn::Tensor sinusoidal_positional_encoding(std::int64_t k, std::int64_t d);

// Lower-triangular ones: position i may attend to positions j <= i.
nn::Tensor causal_attention_mask(std::int64_t k);

// Stacked graph convolutions over the normalized adjacency; leaky-relu
// between layers, final layer linear. Returns [N x user_dim].
nn::Var gcn_forward(nn::Tape& tape, const FeatureMatrix& features,
                    const NormalizedAdjacency& adj, GetNextModel& model);

// Trainable time encoding of a time-of-day fraction: component 0 is linear
// omega_0*t + phi_0, components i >= 1 are sin(omega_i*t + phi_i).
// Returns a [timecat_dim x 1] column. Throws DomainError for t outside [0,1).
nn::Var time2vec(nn::Tape& tape, double t, GetNextModel& model);

// Row-wise time encoding of a whole sequence: returns [k x timecat_dim].
nn::Var time2vec_rows(nn::Tape& tape, const std::vector<double>& times, GetNextModel& model);

// leaky_relu(W [e_a ; e_b] + b) on column vectors; output width doubles.
nn::Var fuse_poi_user(nn::Tape& tape, nn::Var e_poi, nn::Var e_user, GetNextModel& model);
nn::Var fuse_time_category(nn::Tape& tape, nn::Var e_time, nn::Var e_cat, GetNextModel& model);

// One check-in as a [model_dim x 1] column: fused POI/user block stacked on
// the fused time/category block. poi_embeddings is the gcn_forward output.
nn::Var checkin_embedding(nn::Tape& tape, const CheckIn& checkin, std::int64_t category,
                          GetNextModel& model, nn::Var poi_embeddings);

// Dense [N x N] transition matrix on the tape: score(i->j) =
// leaky_relu(x_i . a_src + x_j . a_dst) softmaxed over i's out-edges.
// Rows of nodes without out-edges are constant 1/N (no gradient through the
// fallback).
nn::Var transition_attention(nn::Tape& tape, const FeatureMatrix& features, const FlowMap& fm,
                             GetNextModel& model);

// Forward-only snapshot of transition_attention.
TransitionAttentionMap transition_attention_map(const FeatureMatrix& features, const FlowMap& fm,
                                                GetNextModel& model);

// Adds the positional table to x0 and applies the encoder stack. attn_mask
// is [k x k]; nonzero marks allowed (query row, key column) pairs.
nn::Var encoder_forward(nn::Tape& tape, nn::Var x0, GetNextModel& model,
                        const nn::Tensor& attn_mask);

struct HeadOutputs {
    nn::Var poi_logits;  // [k x N]
    nn::Var time_pred;   // [k x 1]
    nn::Var cat_logits;  // [k x C]
};

HeadOutputs heads_forward(nn::Tape& tape, nn::Var encoded, GetNextModel& model);

// Residual bias from the transition matrix: output row i = poi_logits row i
// plus the transition row of the POI observed at input position i.
nn::Var final_poi_logits(nn::Tape& tape, nn::Var poi_logits, nn::Var phi,
                         const std::vector<std::int64_t>& input_pois);

// Per-position supervision targets; mask entry 0 marks a padded slot.
struct SequenceTargets {
    std::vector<std::int64_t> poi;
    std::vector<std::int64_t> category;
    std::vector<double> time;
    std::vector<double> mask;
};

// Masked-mean POI cross-entropy + 10 * masked-mean squared time error +
// masked-mean category cross-entropy.
nn::Var combined_loss(nn::Tape& tape, nn::Var final_logits, nn::Var time_pred,
                      nn::Var cat_logits, const SequenceTargets& targets);

// One padded supervised sequence: inputs are positions 1..m-1 of a
// trajectory, targets are positions 2..m shifted by one.
struct SequenceExample {
    std::int64_t user = 0;
    std::vector<std::int64_t> input_pois;
    std::vector<std::int64_t> input_categories;
    std::vector<double> input_times;
    SequenceTargets targets;

    std::int64_t length() const { return static_cast<std::int64_t>(input_pois.size()); }
    std::int64_t n_valid() const;
};

// Full forward for one sequence; returns the residual-adjusted POI logits
// [k x N]. Optionally exposes the raw head outputs.
nn::Var sequence_logits(nn::Tape& tape, const SequenceExample& ex, GetNextModel& model,
                        nn::Var poi_embeddings, nn::Var phi, HeadOutputs* heads_out = nullptr);

nn::Var sequence_loss(nn::Tape& tape, const SequenceExample& ex, GetNextModel& model,
                      nn::Var poi_embeddings, nn::Var phi);

// Mean loss per supervised position across every member of the batch.
nn::Var batch_loss(nn::Tape& tape, const std::vector<SequenceExample>& batch,
                   GetNextModel& model, nn::Var poi_embeddings, nn::Var phi);

}  // namespace poirec
