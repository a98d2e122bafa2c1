#include "swarmplan/config.hpp"

#include "swarmplan/comm_graph.hpp"
#include "swarmplan/evaluation.hpp"

#include "toml.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace swarmplan {
namespace {

/// Typed access to one table; remembers which keys were read so leftovers can
/// be reported as unknown.
class Section {
public:
    Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

    template <class T>
    void read(const char* key, T& out) {
        used_.insert(key);
        if (table_ == nullptr) return;
        const toml::node* node = table_->get(key);
        if (node == nullptr) return;
        if constexpr (std::is_same_v<T, bool>) {
            auto v = node->value<bool>();
            if (!v) fail(key, "a boolean");
            out = *v;
        } else if constexpr (std::is_integral_v<T>) {
            auto v = node->value<std::int64_t>();
            if (!v || !node->is_integer()) fail(key, "an integer");
            if (*v < 0 && std::is_unsigned_v<T>) fail(key, "a nonnegative integer");
            out = static_cast<T>(*v);
        } else if constexpr (std::is_floating_point_v<T>) {
            auto v = node->value<double>();
            if (!v) fail(key, "a number");
            out = *v;
        } else {
            auto v = node->value<std::string>();
            if (!v) fail(key, "a string");
            out = T(*v);
        }
    }

    template <class T>
    void read_list(const char* key, std::vector<T>& out) {
        used_.insert(key);
        if (table_ == nullptr) return;
        const toml::node* node = table_->get(key);
        if (node == nullptr) return;
        const toml::array* arr = node->as_array();
        if (arr == nullptr) fail(key, "an array");
        std::vector<T> values;
        for (const toml::node& item : *arr) {
            auto v = item.value<T>();
            if (!v) fail(key, "an array of numbers");
            values.push_back(*v);
        }
        out = std::move(values);
    }

    /// Marks a key as known without reading it (sub-tables handled elsewhere).
    void allow(const char* key) { used_.insert(key); }

    bool has(const char* key) const { return table_ != nullptr && table_->contains(key); }

    void reject_unknown() const {
        if (table_ == nullptr) return;
        for (auto&& [k, v] : *table_) {
            (void)v;
            const std::string key(k.str());
            if (!used_.count(key)) throw ConfigError("unknown key '" + qualified(key.c_str()) + "'");
        }
    }

private:
    std::string qualified(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    [[noreturn]] void fail(const char* key, const char* expected) const {
        throw ConfigError("'" + qualified(key) + "' must be " + expected);
    }

    const toml::table* table_;
    std::string name_;
    std::set<std::string> used_;
};

const toml::table* subtable(const toml::table& root, const char* name) {
    const toml::node* n = root.get(name);
    if (n == nullptr) return nullptr;
    if (!n->is_table()) throw ConfigError("'" + std::string(name) + "' must be a table");
    return n->as_table();
}

template <class T>
std::string toml_list(const std::vector<T>& v) {
    std::ostringstream o;
    o << std::setprecision(17) << '[';
    for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << v[i];
    o << ']';
    return o.str();
}

std::string toml_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string toml_double(double v) {
    std::ostringstream o;
    o << std::setprecision(17) << v;
    std::string s = o.str();
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

void ExperimentConfig::finalize() {
    if (density) {
        if (!(*density > 0.0)) throw ConfigError("sim.density must be > 0");
        sim.width = SimParams::width_for_density(sim.n_agents, *density);
    }
    try {
        sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[sim] ") + e.what());
    }
    network.input_dim = observation_width(sim.k_neighbors);
    network.output_dim = 2;
    network.max_speed = sim.max_speed;
    try {
        network.validate();
        rl.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (!(il.mix_ratio >= 0.0 && il.mix_ratio <= 1.0)) throw ConfigError("train.mix_ratio must lie in [0, 1]");
    if (il.lr_final && !(*il.lr_final >= 0.0)) throw ConfigError("train.lr_final must be >= 0");
    if (il.batch_size < 1 || il.buffer_capacity == 0) throw ConfigError("train batch size and buffer must be > 0");
    for (int n : sweep_agents) {
        if (n < 1) throw ConfigError("sweep.agents entries must be >= 1");
    }
    for (double d : sweep_densities) {
        if (!(d > 0.0)) throw ConfigError("sweep.densities entries must be > 0");
    }
    il.seed = seed;
    il.threads = threads;
    rl.seed = seed;
    rl.threads = threads;
}

std::vector<std::uint64_t> ExperimentConfig::episode_seeds() const { return seed_range(seed, episodes); }

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": "
            << e.description();
        throw ConfigError(msg.str());
    }

    ExperimentConfig c;
    Section top(&root, "");
    std::string output_dir = c.output_dir.string();
    top.read("seed", c.seed);
    top.read("episodes", c.episodes);
    top.read("threads", c.threads);
    top.read("output_dir", output_dir);
    top.read("write_traces", c.write_traces);
    c.output_dir = output_dir;
    for (const char* t : {"sim", "policy", "train", "rl", "sweep"}) top.allow(t);
    top.reject_unknown();

    Section sim(subtable(root, "sim"), "sim");
    sim.read("n_agents", c.sim.n_agents);
    sim.read("width", c.sim.width);
    if (sim.has("density")) {
        if (sim.has("width")) throw ConfigError("set either sim.width or sim.density, not both");
        double d = 0.0;
        sim.read("density", d);
        c.density = d;
    }
    sim.allow("density");
    sim.read("agent_radius", c.sim.agent_radius);
    sim.read("coverage_radius", c.sim.coverage_radius);
    sim.read("max_speed", c.sim.max_speed);
    sim.read("dt", c.sim.dt);
    sim.read("horizon_steps", c.sim.horizon_steps);
    sim.read("k_neighbors", c.sim.k_neighbors);
    sim.read("gamma", c.sim.gamma);
    sim.read("near_collision_factor", c.sim.near_collision_factor);
    sim.reject_unknown();

    Section pol(subtable(root, "policy"), "policy");
    std::string name = c.policy.name();
    std::string nonlinearity = to_string(c.network.nonlinearity);
    pol.read("name", name);
    pol.read("num_layers", c.network.num_layers);
    pol.read("taps", c.network.taps);
    pol.read("features", c.network.features);
    pol.read("mlp_hidden", c.network.mlp_hidden);
    pol.read("mlp_depth", c.network.mlp_depth);
    pol.read("nonlinearity", nonlinearity);
    pol.read("action_squash", c.network.action_squash);
    pol.read("use_bias", c.network.use_bias);
    pol.read("normalize_adjacency", c.network.normalize_adjacency);
    pol.reject_unknown();
    try {
        c.policy = PolicyKind::parse(name);
        c.network.nonlinearity = parse_nonlinearity(nonlinearity);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[policy] ") + e.what());
    }

    Section tr(subtable(root, "train"), "train");
    tr.read("epochs", c.il.epochs);
    tr.read("episodes_per_epoch", c.il.episodes_per_epoch);
    tr.read("batch_size", c.il.batch_size);
    tr.read("grad_steps_per_epoch", c.il.grad_steps_per_epoch);
    tr.read("buffer_capacity", c.il.buffer_capacity);
    tr.read("mix_ratio", c.il.mix_ratio);
    tr.read("eval_episodes", c.il.eval_episodes);
    tr.read("lr", c.il.optimizer.lr);
    tr.read("beta1", c.il.optimizer.beta1);
    tr.read("beta2", c.il.optimizer.beta2);
    tr.read("eps", c.il.optimizer.eps);
    tr.read("weight_decay", c.il.optimizer.weight_decay);
    if (tr.has("lr_final")) {
        double lr_final = 0.0;
        tr.read("lr_final", lr_final);
        c.il.lr_final = lr_final;
    }
    tr.allow("lr_final");
    tr.reject_unknown();

    Section rl(subtable(root, "rl"), "rl");
    const Td3Config scaled = Td3Config::for_max_speed(c.sim.max_speed);
    c.rl.target_noise_sigma = scaled.target_noise_sigma;
    c.rl.target_noise_clip = scaled.target_noise_clip;
    c.rl.exploration_sigma = scaled.exploration_sigma;
    std::string pretrained;
    rl.read("pretrained", pretrained);
    c.pretrained = pretrained;
    rl.read("epochs", c.rl.epochs);
    rl.read("episodes_per_epoch", c.rl.episodes_per_epoch);
    rl.read("batch_size", c.rl.batch_size);
    rl.read("grad_steps_per_epoch", c.rl.grad_steps_per_epoch);
    rl.read("buffer_capacity", c.rl.buffer_capacity);
    rl.read("eval_episodes", c.rl.eval_episodes);
    rl.read("tau", c.rl.tau);
    rl.read("policy_delay", c.rl.policy_delay);
    rl.read("target_noise_sigma", c.rl.target_noise_sigma);
    rl.read("target_noise_clip", c.rl.target_noise_clip);
    rl.read("exploration_sigma", c.rl.exploration_sigma);
    rl.read("gamma", c.rl.rl_gamma);
    rl.read("alpha", c.rl.reward.collision_weight);
    rl.read("beta", c.rl.reward.length_scale);
    rl.read("actor_freeze_epochs", c.rl.schedule.actor_freeze_epochs);
    rl.read("ramp_epochs", c.rl.schedule.ramp_epochs);
    rl.read("critic_lr_initial", c.rl.schedule.critic_lr_initial);
    rl.read("critic_lr_final", c.rl.schedule.critic_lr_final);
    rl.read("actor_lr_final", c.rl.schedule.actor_lr_final);
    rl.read("weight_decay", c.rl.weight_decay);
    rl.read("q_limit", c.rl.q_limit);
    rl.reject_unknown();

    Section sw(subtable(root, "sweep"), "sweep");
    std::vector<std::int64_t> agents(c.sweep_agents.begin(), c.sweep_agents.end());
    sw.read_list("agents", agents);
    c.sweep_agents.assign(agents.begin(), agents.end());
    sw.read_list("densities", c.sweep_densities);
    sw.reject_unknown();

    c.finalize();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

std::string to_toml(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "seed = " << c.seed << "\n"
      << "episodes = " << c.episodes << "\n"
      << "threads = " << c.threads << "\n"
      << "output_dir = " << toml_string(c.output_dir.generic_string()) << "\n"
      << "write_traces = " << (c.write_traces ? "true" : "false") << "\n\n";
    o << "[sim]\n"
      << "n_agents = " << c.sim.n_agents << "\n";
    if (c.density) {
        o << "density = " << toml_double(*c.density) << "\n";
    } else {
        o << "width = " << toml_double(c.sim.width) << "\n";
    }
    o << "agent_radius = " << toml_double(c.sim.agent_radius) << "\n"
      << "coverage_radius = " << toml_double(c.sim.coverage_radius) << "\n"
      << "max_speed = " << toml_double(c.sim.max_speed) << "\n"
      << "dt = " << toml_double(c.sim.dt) << "\n"
      << "horizon_steps = " << c.sim.horizon_steps << "\n"
      << "k_neighbors = " << c.sim.k_neighbors << "\n"
      << "gamma = " << toml_double(c.sim.gamma) << "\n"
      << "near_collision_factor = " << toml_double(c.sim.near_collision_factor) << "\n\n";
    o << "[policy]\n"
      << "name = " << toml_string(c.policy.name()) << "\n"
      << "num_layers = " << c.network.num_layers << "\n"
      << "taps = " << c.network.taps << "\n"
      << "features = " << c.network.features << "\n"
      << "mlp_hidden = " << c.network.mlp_hidden << "\n"
      << "mlp_depth = " << c.network.mlp_depth << "\n"
      << "nonlinearity = " << toml_string(to_string(c.network.nonlinearity)) << "\n"
      << "action_squash = " << (c.network.action_squash ? "true" : "false") << "\n"
      << "use_bias = " << (c.network.use_bias ? "true" : "false") << "\n"
      << "normalize_adjacency = " << (c.network.normalize_adjacency ? "true" : "false") << "\n\n";
    o << "[train]\n"
      << "epochs = " << c.il.epochs << "\n"
      << "episodes_per_epoch = " << c.il.episodes_per_epoch << "\n"
      << "batch_size = " << c.il.batch_size << "\n"
      << "grad_steps_per_epoch = " << c.il.grad_steps_per_epoch << "\n"
      << "buffer_capacity = " << c.il.buffer_capacity << "\n"
      << "mix_ratio = " << toml_double(c.il.mix_ratio) << "\n"
      << "eval_episodes = " << c.il.eval_episodes << "\n"
      << "lr = " << toml_double(c.il.optimizer.lr) << "\n"
      << "beta1 = " << toml_double(c.il.optimizer.beta1) << "\n"
      << "beta2 = " << toml_double(c.il.optimizer.beta2) << "\n"
      << "eps = " << toml_double(c.il.optimizer.eps) << "\n"
      << "weight_decay = " << toml_double(c.il.optimizer.weight_decay) << "\n";
    if (c.il.lr_final) o << "lr_final = " << toml_double(*c.il.lr_final) << "\n";
    o << "\n";
    o << "[rl]\n"
      << "pretrained = " << toml_string(c.pretrained.generic_string()) << "\n"
      << "epochs = " << c.rl.epochs << "\n"
      << "episodes_per_epoch = " << c.rl.episodes_per_epoch << "\n"
      << "batch_size = " << c.rl.batch_size << "\n"
      << "grad_steps_per_epoch = " << c.rl.grad_steps_per_epoch << "\n"
      << "buffer_capacity = " << c.rl.buffer_capacity << "\n"
      << "eval_episodes = " << c.rl.eval_episodes << "\n"
      << "tau = " << toml_double(c.rl.tau) << "\n"
      << "policy_delay = " << c.rl.policy_delay << "\n"
      << "target_noise_sigma = " << toml_double(c.rl.target_noise_sigma) << "\n"
      << "target_noise_clip = " << toml_double(c.rl.target_noise_clip) << "\n"
      << "exploration_sigma = " << toml_double(c.rl.exploration_sigma) << "\n"
      << "gamma = " << toml_double(c.rl.rl_gamma) << "\n"
      << "alpha = " << toml_double(c.rl.reward.collision_weight) << "\n"
      << "beta = " << toml_double(c.rl.reward.length_scale) << "\n"
      << "actor_freeze_epochs = " << c.rl.schedule.actor_freeze_epochs << "\n"
      << "ramp_epochs = " << c.rl.schedule.ramp_epochs << "\n"
      << "critic_lr_initial = " << toml_double(c.rl.schedule.critic_lr_initial) << "\n"
      << "critic_lr_final = " << toml_double(c.rl.schedule.critic_lr_final) << "\n"
      << "actor_lr_final = " << toml_double(c.rl.schedule.actor_lr_final) << "\n"
      << "weight_decay = " << toml_double(c.rl.weight_decay) << "\n"
      << "q_limit = " << toml_double(c.rl.q_limit) << "\n\n";
    o << "[sweep]\n"
      << "agents = " << toml_list(c.sweep_agents) << "\n"
      << "densities = " << toml_list(c.sweep_densities) << "\n";
    return o.str();
}

}  // namespace swarmplan
