#include "scsi/config.hpp"

#include "scsi/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace scsi {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct Entry {
    std::string value;
    int line;
};

struct Section {
    int line = 0;
    std::map<std::string, Entry> keys;
};

class Reader {
public:
    Reader(const std::string& origin, const std::string& section, Section& s)
        : origin_(origin), section_(section), s_(s) {}

    bool has(const std::string& key) const { return s_.keys.count(key) > 0; }

    template <class T>
    void get(const std::string& key, T& out) {
        auto it = s_.keys.find(key);
        if (it == s_.keys.end()) return;
        used_.insert(key);
        try {
            out = convert<T>(it->second.value);
        } catch (const Error& e) {
            fail(it->second.line, "[" + section_ + "] " + key + ": " + e.what());
        }
    }

    template <class T, class Fn>
    void get_with(const std::string& key, T& out, Fn parse) {
        auto it = s_.keys.find(key);
        if (it == s_.keys.end()) return;
        used_.insert(key);
        try {
            out = parse(it->second.value);
        } catch (const Error& e) {
            fail(it->second.line, "[" + section_ + "] " + key + ": " + e.what());
        }
    }

    void finish() const {
        for (const auto& [k, e] : s_.keys)
            if (!used_.count(k)) fail(e.line, "unknown key '" + k + "' in [" + section_ + "]");
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw Error(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

private:
    template <class T>
    static T convert(const std::string& v) {
        if constexpr (std::is_same_v<T, std::string>) {
            return v;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (v == "true" || v == "1" || v == "yes") return true;
            if (v == "false" || v == "0" || v == "no") return false;
            throw Error("expected a boolean, got '" + v + "'");
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
            std::vector<int> out;
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                out.push_back(convert<int>(item));
            }
            return out;
        } else if constexpr (std::is_same_v<T, std::optional<std::uint64_t>>) {
            return convert<std::uint64_t>(v);
        } else {
            T x{};
            const auto* end = v.data() + v.size();
            auto [p, ec] = std::from_chars(v.data(), end, x);
            if (ec != std::errc() || p != end) throw Error("cannot parse '" + v + "' as a number");
            return x;
        }
    }

    std::string origin_;
    std::string section_;
    Section& s_;
    std::set<std::string> used_;
};

ChannelSpec read_channel(Reader& r, const std::string& origin, int line,
                         std::optional<std::uint64_t>* seed) {
    ChannelSpec c;
    if (!r.has("kind")) throw Error(origin + ":" + std::to_string(line) + ": channel section needs 'kind'");
    r.get_with("kind", c.kind, [](const std::string& v) { return parse_channel_kind(v); });
    r.get("sigma_n", c.sigma_n);
    r.get("rho", c.rho);
    r.get_with("fill", c.fill, [](const std::string& v) { return parse_mask_fill(v); });
    r.get("sigma_r", c.sigma_r);
    r.get("lambda_n", c.lambda_n);
    r.get("shift", c.poisson_shift);
    if (seed) r.get("seed", *seed);
    r.finish();
    try {
        c.validate();
    } catch (const Error& e) {
        r.fail(line, e.what());
    }
    return c;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

RegressorConfig ModelConfig::regressor(int data_dim, int latent_dim) const {
    RegressorConfig r;
    r.data_dim = data_dim;
    r.latent_dim = latent_dim;
    r.hidden = hidden;
    r.activation = activation;
    r.time_embed_dim = time_embed_dim;
    r.max_frequency = max_frequency;
    return r;
}

ChannelSpec ExperimentConfig::channel() const {
    if (channel_stages.empty()) throw Error("experiment has no channel");
    ChannelSpec c = channel_stages.front();
    for (std::size_t i = 1; i < channel_stages.size(); ++i) c = compose(channel_stages[i], c);
    return c;
}

void ExperimentConfig::validate() const {
    train.validate();
    channel().validate();
    if (data.dataset != "two-moons") throw Error("data: unknown dataset '" + data.dataset + "'");
    if (data.n < 1) throw Error("data: n must be >= 1");
    if (eval.holdout < 1 || eval.holdout > kMaxExactW2Size)
        throw Error("eval: holdout must lie in [1, 4096]");
    if (eval.metric != "exact" && eval.metric != "sliced")
        throw Error("eval: metric must be exact or sliced");
    if (eval.w2_every < 0) throw Error("eval: w2_every must be >= 0");
    if (eval.projections < 1) throw Error("eval: projections must be >= 1");
    if (model.init_scale < 0.0) throw Error("train: init_scale must be >= 0");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    std::map<std::string, Section> sections;
    std::vector<std::string> order;
    std::string current;  // "" = top level
    sections[current].line = 0;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw Error(origin + ":" + std::to_string(line) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail("malformed section header '" + s + "'");
            current = trim(s.substr(1, s.size() - 2));
            if (sections.count(current)) fail("duplicate section [" + current + "]");
            sections[current].line = line;
            order.push_back(current);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail("expected 'key = value', got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) fail("empty key");
        auto& sec = sections[current];
        if (sec.keys.count(key)) fail("duplicate key '" + key + "'");
        sec.keys[key] = Entry{value, line};
    }

    const std::set<std::string> known = {"schedule", "channel", "transport", "train", "data", "eval"};
    for (const auto& name : order) {
        const bool extra_stage = name.rfind("channel", 0) == 0 && name.size() > 7 &&
                                 name.find_first_not_of("0123456789", 7) == std::string::npos;
        if (!known.count(name) && !extra_stage)
            throw Error(origin + ":" + std::to_string(sections[name].line) + ": unknown section [" +
                        name + "]");
    }
    for (const char* req : {"schedule", "channel", "transport", "train"})
        if (!sections.count(req))
            throw Error(origin + ": missing required section [" + std::string(req) + "]");

    ExperimentConfig c;
    {
        Reader r(origin, "top level", sections[""]);
        r.get("name", c.name);
        r.get("seed", c.seed);
        std::string out = c.out.string();
        r.get("out", out);
        c.out = out;
        r.finish();
    }
    {
        Reader r(origin, "schedule", sections["schedule"]);
        ScheduleKind kind = ScheduleKind::OdeLinear;
        double eps = 0.0;
        if (!r.has("kind"))
            throw Error(origin + ":" + std::to_string(sections["schedule"].line) +
                        ": [schedule] needs 'kind'");
        r.get_with("kind", kind, [](const std::string& v) { return parse_schedule_kind(v); });
        if (kind == ScheduleKind::SdeLinear) eps = 0.1;
        r.get("epsilon", eps);
        r.finish();
        try {
            c.train.schedule = Schedule::make(kind, eps);
        } catch (const Error& e) {
            r.fail(sections["schedule"].line, e.what());
        }
    }
    {
        Reader r(origin, "channel", sections["channel"]);
        c.channel_stages.push_back(read_channel(r, origin, sections["channel"].line, &c.channel_seed));
        for (int i = 2;; ++i) {
            const std::string name = "channel" + std::to_string(i);
            if (!sections.count(name)) break;
            Reader rs(origin, name, sections[name]);
            c.channel_stages.push_back(read_channel(rs, origin, sections[name].line, nullptr));
        }
    }
    {
        Reader r(origin, "transport", sections["transport"]);
        auto& t = c.train.transport;
        r.get("steps", t.steps);
        r.get_with("mode", t.mode, [](const std::string& v) { return parse_transport_mode(v); });
        r.get_with("scheme", t.scheme, [](const std::string& v) { return parse_ode_scheme(v); });
        r.get("epsilon", t.epsilon);
        r.get_with("epsilon_mode", t.epsilon_mode,
                   [](const std::string& v) { return parse_epsilon_mode(v); });
        r.get("t_min", t.t_min);
        r.get("threads", t.threads);
        r.finish();
    }
    {
        Reader r(origin, "train", sections["train"]);
        auto& t = c.train;
        r.get("K", t.outer_iterations);
        r.get("T_tr", t.inner_steps);
        r.get("mix_p", t.mix_p);
        r.get("batch_size", t.batch_size);
        r.get("resample", t.resample);
        r.get("t_min", t.t_min);
        r.get_with("fields", t.fields, [](const std::string& v) { return parse_field_set(v); });
        r.get("lr", t.adam.lr);
        r.get("warmup_steps", t.adam.warmup_steps);
        bool cosine = true;
        r.get("cosine", cosine);
        r.get("min_lr_ratio", t.adam.min_lr_ratio);
        t.adam.total_steps = cosine ? static_cast<long>(t.outer_iterations) * t.inner_steps : 0;
        r.get("hidden", c.model.hidden);
        r.get_with("activation", c.model.activation,
                   [](const std::string& v) { return parse_activation(v); });
        r.get("time_embed_dim", c.model.time_embed_dim);
        r.get("max_frequency", c.model.max_frequency);
        r.get("init_scale", c.model.init_scale);
        r.finish();
    }
    if (sections.count("data")) {
        Reader r(origin, "data", sections["data"]);
        r.get("dataset", c.data.dataset);
        r.get("n", c.data.n);
        r.finish();
    }
    if (sections.count("eval")) {
        Reader r(origin, "eval", sections["eval"]);
        r.get("holdout", c.eval.holdout);
        r.get("w2_every", c.eval.w2_every);
        r.get("metric", c.eval.metric);
        r.get("projections", c.eval.projections);
        r.get("checkpoints", c.eval.checkpoints);
        r.finish();
    }
    try {
        c.validate();
    } catch (const Error& e) {
        throw Error(origin + ": " + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string render_config(const ExperimentConfig& c) {
    std::ostringstream o;
    const auto& t = c.train;
    o << "name = " << c.name << "\n";
    o << "seed = " << c.seed << "\n";
    o << "out = " << c.out.string() << "\n\n";
    o << "[schedule]\nkind = " << to_string(t.schedule.kind) << "\nepsilon = " << fmt(t.schedule.epsilon)
      << "\n\n";
    for (std::size_t i = 0; i < c.channel_stages.size(); ++i) {
        const auto& ch = c.channel_stages[i];
        o << "[channel" << (i == 0 ? std::string() : std::to_string(i + 1)) << "]\n";
        o << "kind = " << to_string(ch.kind) << "\n";
        switch (ch.kind) {
            case ChannelKind::Awgn: o << "sigma_n = " << fmt(ch.sigma_n) << "\n"; break;
            case ChannelKind::RandomMask:
                o << "rho = " << fmt(ch.rho) << "\nfill = "
                  << (ch.fill == MaskFill::Zero ? "zero" : "standard-gaussian") << "\n";
                break;
            case ChannelKind::GaussianBlur1D: o << "sigma_r = " << fmt(ch.sigma_r) << "\n"; break;
            case ChannelKind::PoissonNoise:
                o << "lambda_n = " << fmt(ch.lambda_n) << "\nshift = " << fmt(ch.poisson_shift) << "\n";
                break;
            case ChannelKind::Compose: throw Error("render_config: nested compose stages are not representable");
        }
        if (i == 0 && c.channel_seed) o << "seed = " << *c.channel_seed << "\n";
        o << "\n";
    }
    const auto& tr = t.transport;
    o << "[transport]\nsteps = " << tr.steps << "\nmode = " << to_string(tr.mode)
      << "\nscheme = " << to_string(tr.scheme) << "\nepsilon = " << fmt(tr.epsilon)
      << "\nepsilon_mode = " << to_string(tr.epsilon_mode) << "\nt_min = " << fmt(tr.t_min)
      << "\nthreads = " << tr.threads << "\n\n";
    o << "[train]\nK = " << t.outer_iterations << "\nT_tr = " << t.inner_steps
      << "\nmix_p = " << fmt(t.mix_p) << "\nbatch_size = " << t.batch_size
      << "\nresample = " << t.resample << "\nt_min = " << fmt(t.t_min)
      << "\nfields = " << to_string(t.fields) << "\nlr = " << fmt(t.adam.lr)
      << "\nwarmup_steps = " << t.adam.warmup_steps
      << "\ncosine = " << (t.adam.total_steps > 0 ? "true" : "false")
      << "\nmin_lr_ratio = " << fmt(t.adam.min_lr_ratio) << "\nhidden = ";
    for (std::size_t i = 0; i < c.model.hidden.size(); ++i) o << (i ? "," : "") << c.model.hidden[i];
    o << "\nactivation = " << to_string(c.model.activation)
      << "\ntime_embed_dim = " << c.model.time_embed_dim
      << "\nmax_frequency = " << fmt(c.model.max_frequency)
      << "\ninit_scale = " << fmt(c.model.init_scale) << "\n\n";
    o << "[data]\ndataset = " << c.data.dataset << "\nn = " << c.data.n << "\n\n";
    o << "[eval]\nholdout = " << c.eval.holdout << "\nw2_every = " << c.eval.w2_every
      << "\nmetric = " << c.eval.metric << "\nprojections = " << c.eval.projections
      << "\ncheckpoints = " << (c.eval.checkpoints ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace scsi
