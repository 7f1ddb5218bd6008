#include "bcdp/maze.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "bcdp/error.hpp"

namespace bcdp {

namespace {

constexpr int kRowStep[4] = {-1, 1, 0, 0};
constexpr int kColStep[4] = {0, 0, -1, 1};

const char* kCorridor = "S.G\n";

const char* kUmaze =
    "#####\n"
    "#SSS#\n"
    "###S#\n"
    "#GSS#\n"
    "#####\n";

const char* kMedium =
    "########\n"
    "#SS#SSS#\n"
    "#S##S#S#\n"
    "#SSSS#S#\n"
    "##S#SSS#\n"
    "#SS#S#S#\n"
    "#S#SSSG#\n"
    "########\n";

const char* kLarge =
    "############\n"
    "#SSSS#SSSSS#\n"
    "#S##S#S###S#\n"
    "#S#SSSS#SSS#\n"
    "#S#S##S#S#S#\n"
    "#SSS#SSSS#S#\n"
    "###S#S##S#S#\n"
    "#SSS#SS#SSS#\n"
    "#S#SSS##S#S#\n"
    "#S#S#SSSS#S#\n"
    "#SSS#S#SSSG#\n"
    "############\n";

double clip(double v, double bound) { return std::clamp(v, -bound, bound); }

} // namespace

MazeLayout::MazeLayout(int width, int height, std::vector<bool> walls, std::vector<Cell> start_cells, Cell goal)
    : width_(width), height_(height), walls_(std::move(walls)), starts_(std::move(start_cells)), goal_(goal) {
    if (width_ <= 0 || height_ <= 0) throw ValidationError("maze grid is empty");
    if (walls_.size() != static_cast<std::size_t>(width_) * height_) throw StructuralError("wall mask has wrong size");
    if (starts_.empty()) throw ValidationError("maze needs at least one start cell");
    if (is_wall(goal_)) throw ValidationError("goal cell must be open");
    for (const Cell& c : starts_)
        if (is_wall(c)) throw ValidationError("start cells must be open");

    open_lookup_.assign(walls_.size(), -1);
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            if (!walls_[static_cast<std::size_t>(r) * width_ + c]) {
                open_lookup_[static_cast<std::size_t>(r) * width_ + c] = static_cast<int>(open_.size());
                open_.push_back({r, c});
            }
        }
    }

    dist_.assign(open_.size(), -1);
    std::deque<Cell> queue{goal_};
    dist_[static_cast<std::size_t>(open_index(goal_))] = 0;
    while (!queue.empty()) {
        const Cell cur = queue.front();
        queue.pop_front();
        const int d = dist_[static_cast<std::size_t>(open_index(cur))];
        for (int k = 0; k < 4; ++k) {
            const Cell next{cur.row + kRowStep[k], cur.col + kColStep[k]};
            if (is_wall(next)) continue;
            auto& slot = dist_[static_cast<std::size_t>(open_index(next))];
            if (slot >= 0) continue;
            slot = d + 1;
            queue.push_back(next);
        }
    }
}

MazeLayout MazeLayout::parse(const std::string& text) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw ValidationError("maze text has no rows");
    const int width = static_cast<int>(rows.front().size());
    const int height = static_cast<int>(rows.size());
    std::vector<bool> walls(static_cast<std::size_t>(width) * height, false);
    std::vector<Cell> starts;
    std::optional<Cell> goal;
    for (int r = 0; r < height; ++r) {
        if (static_cast<int>(rows[r].size()) != width) throw ParseError(r + 1, "ragged maze row");
        for (int c = 0; c < width; ++c) {
            switch (rows[r][c]) {
            case '#': walls[static_cast<std::size_t>(r) * width + c] = true; break;
            case '.': break;
            case 'S': starts.push_back({r, c}); break;
            case 'G':
                if (goal) throw ParseError(r + 1, "more than one goal cell");
                goal = Cell{r, c};
                break;
            default: throw ParseError(r + 1, std::string("unknown maze character '") + rows[r][c] + "'");
            }
        }
    }
    if (!goal) throw ValidationError("maze has no goal cell");
    return MazeLayout(width, height, std::move(walls), std::move(starts), *goal);
}

MazeLayout MazeLayout::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open layout file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

MazeLayout MazeLayout::builtin(const std::string& name) {
    if (name == "corridor") return parse(kCorridor);
    if (name == "umaze") return parse(kUmaze);
    if (name == "medium") return parse(kMedium);
    if (name == "large") return parse(kLarge);
    throw ValidationError("unknown built-in layout '" + name + "'");
}

std::string MazeLayout::to_text() const {
    std::string out;
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            const Cell cell{r, c};
            char ch = is_wall(cell) ? '#' : '.';
            if (std::find(starts_.begin(), starts_.end(), cell) != starts_.end()) ch = 'S';
            if (cell == goal_) ch = 'G';
            out.push_back(ch);
        }
        out.push_back('\n');
    }
    return out;
}

bool MazeLayout::is_wall(Cell c) const {
    if (c.row < 0 || c.col < 0 || c.row >= height_ || c.col >= width_) return true;
    return walls_[static_cast<std::size_t>(c.row) * width_ + c.col];
}

int MazeLayout::open_index(Cell c) const {
    if (is_wall(c)) throw StructuralError("cell is not open");
    return open_lookup_[static_cast<std::size_t>(c.row) * width_ + c.col];
}

std::string to_string(RewardMode mode) { return mode == RewardMode::sparse ? "sparse" : "dense"; }

RewardMode parse_reward_mode(const std::string& text) {
    if (text == "sparse") return RewardMode::sparse;
    if (text == "dense") return RewardMode::dense;
    throw ValidationError("reward mode must be 'sparse' or 'dense', got '" + text + "'");
}

// ---------------------------------------------------------------------------
// Discrete maze

DiscreteMazeEnv::DiscreteMazeEnv(MazeLayout layout, RewardMode mode, int horizon, double gamma,
                                 StateEncoding encoding, double dense_scale, std::string name)
    : layout_(std::move(layout)), mode_(mode), horizon_(horizon), gamma_(gamma), encoding_(encoding),
      dense_scale_(dense_scale), name_(std::move(name)) {
    if (horizon_ < 1) throw ValidationError("horizon must be at least 1");
    if (!(dense_scale_ > 0.0)) throw ValidationError("dense reward scale must be positive");
}

std::string DiscreteMazeEnv::id() const {
    return (encoding_ == StateEncoding::index ? "grid-" : "gridxy-") + name_ + "-" + to_string(mode_);
}

std::string DiscreteMazeEnv::state_encoding() const {
    return encoding_ == StateEncoding::index ? "index" : "cell_center";
}

Cell DiscreteMazeEnv::decode(const Vec& state) const {
    if (static_cast<int>(state.size()) != state_dim()) throw StructuralError("state has wrong dimension");
    if (encoding_ == StateEncoding::index) {
        const auto idx = static_cast<long>(std::llround(state[0]));
        if (idx < 0 || idx >= static_cast<long>(layout_.open_cells().size()))
            throw StructuralError("state index out of range");
        return layout_.open_cells()[static_cast<std::size_t>(idx)];
    }
    const Cell cell{static_cast<int>(std::floor(state[1])), static_cast<int>(std::floor(state[0]))};
    if (layout_.is_wall(cell)) throw StructuralError("state lies in a wall cell");
    return cell;
}

Vec DiscreteMazeEnv::encode(Cell cell) const {
    if (encoding_ == StateEncoding::index) return {static_cast<double>(layout_.open_index(cell))};
    return {cell.col + 0.5, cell.row + 0.5};
}

Cell DiscreteMazeEnv::move(Cell cell, int action) const {
    if (action < 0 || action >= kGridActions) throw StructuralError("discrete action out of range");
    if (action == stay) return cell;
    const Cell next{cell.row + kRowStep[action], cell.col + kColStep[action]};
    return layout_.is_wall(next) ? cell : next;
}

double DiscreteMazeEnv::reward_at(Cell cell) const {
    if (mode_ == RewardMode::sparse) return cell == layout_.goal() ? 1.0 : 0.0;
    const double d = std::abs(cell.row - layout_.goal().row) + std::abs(cell.col - layout_.goal().col);
    return std::exp(-d / dense_scale_);
}

Vec DiscreteMazeEnv::reset(Rng& rng) const {
    const auto& starts = layout_.start_cells();
    return encode(starts[rng.index(starts.size())]);
}

EnvStep DiscreteMazeEnv::step(const Vec& state, const Vec& action) const {
    const Cell cell = decode(state);
    if (action.size() != 1) throw StructuralError("discrete action must be a length-1 vector");
    const int a = static_cast<int>(std::clamp<long>(std::lround(action[0]), 0, kGridActions - 1));
    const bool absorbing = mode_ == RewardMode::sparse && cell == layout_.goal();
    const Cell next = absorbing ? cell : move(cell, a);
    EnvStep out;
    out.next_state = encode(next);
    out.reward = reward_at(next);
    out.done = mode_ == RewardMode::sparse && next == layout_.goal();
    return out;
}

int DiscreteMazeEnv::expert_move(Cell cell) const {
    const int d = layout_.distance(cell);
    if (d < 0) throw NoPathError("goal unreachable from cell (" + std::to_string(cell.row) + "," +
                                 std::to_string(cell.col) + ")");
    if (d == 0) return stay;
    for (int a = 0; a < 4; ++a) {
        const Cell next = move(cell, a);
        if (next == cell) continue;
        if (layout_.distance(next) == d - 1) return a;
    }
    throw NoPathError("inconsistent distance table");
}

Vec DiscreteMazeEnv::expert_action(const Vec& state) const { return {static_cast<double>(expert_move(decode(state)))}; }

Vec DiscreteMazeEnv::random_action(Rng& rng) const { return {static_cast<double>(rng.index(kGridActions))}; }

Vec DiscreteMazeEnv::position(const Vec& state) const {
    const Cell c = decode(state);
    return {c.col + 0.5, c.row + 0.5};
}

TabularMDP DiscreteMazeEnv::to_tabular() const {
    const auto& cells = layout_.open_cells();
    const int n = static_cast<int>(cells.size());
    TabularMDP mdp = TabularMDP::zeros(n, kGridActions, gamma_);
    for (int s = 0; s < n; ++s) {
        const Cell cell = cells[static_cast<std::size_t>(s)];
        const bool absorbing = mode_ == RewardMode::sparse && cell == layout_.goal();
        for (int a = 0; a < kGridActions; ++a) {
            const Cell next = absorbing ? cell : move(cell, a);
            mdp.p(s, a, layout_.open_index(next)) = 1.0;
            mdp.r(s, a) = reward_at(next);
        }
    }
    const auto& starts = layout_.start_cells();
    for (const Cell& c : starts) mdp.initial_dist[static_cast<std::size_t>(layout_.open_index(c))] += 1.0 / starts.size();
    return mdp;
}

// ---------------------------------------------------------------------------
// Continuous point maze

ContinuousMazeEnv::ContinuousMazeEnv(MazeLayout layout, RewardMode mode, ContinuousMazeParams params, std::string name)
    : layout_(std::move(layout)), mode_(mode), params_(params), name_(std::move(name)) {
    if (params_.horizon < 1) throw ValidationError("horizon must be at least 1");
    if (!(params_.damping >= 0.0 && params_.damping < 1.0)) throw ValidationError("damping must lie in [0, 1)");
    if (!(params_.dt > 0.0) || !(params_.max_force > 0.0)) throw ValidationError("dt and max_force must be positive");
}

std::string ContinuousMazeEnv::id() const { return "point-" + name_ + "-" + to_string(mode_); }

Cell ContinuousMazeEnv::cell_of(double x, double y) const {
    return {static_cast<int>(std::floor(y)), static_cast<int>(std::floor(x))};
}

bool ContinuousMazeEnv::in_goal(double x, double y) const {
    const Cell g = layout_.goal();
    return std::hypot(x - (g.col + 0.5), y - (g.row + 0.5)) <= params_.goal_radius;
}

double ContinuousMazeEnv::reward_at(double x, double y) const {
    if (mode_ == RewardMode::sparse) return in_goal(x, y) ? 1.0 : 0.0;
    const Cell g = layout_.goal();
    return std::exp(-std::hypot(x - (g.col + 0.5), y - (g.row + 0.5)) / params_.dense_scale);
}

Vec ContinuousMazeEnv::reset(Rng& rng) const {
    const auto& starts = layout_.start_cells();
    const Cell c = starts[rng.index(starts.size())];
    const double jx = rng.uniform(-params_.reset_jitter, params_.reset_jitter);
    const double jy = rng.uniform(-params_.reset_jitter, params_.reset_jitter);
    return {c.col + 0.5 + jx, c.row + 0.5 + jy, 0.0, 0.0};
}

EnvStep ContinuousMazeEnv::step(const Vec& state, const Vec& action) const {
    if (state.size() != 4) throw StructuralError("point-maze state must have 4 components");
    if (action.size() != 2) throw StructuralError("point-maze action must have 2 components");
    double x = state[0], y = state[1], vx = state[2], vy = state[3];
    EnvStep out;
    if (mode_ == RewardMode::sparse && in_goal(x, y)) {
        out.next_state = {x, y, 0.0, 0.0};
        out.reward = 1.0;
        out.done = true;
        return out;
    }
    const double ax = clip(action[0], params_.max_force);
    const double ay = clip(action[1], params_.max_force);
    vx = (1.0 - params_.damping) * vx + params_.dt * ax;
    vy = (1.0 - params_.damping) * vy + params_.dt * ay;

    const double nx = x + params_.dt * vx;
    if (layout_.is_wall(cell_of(nx, y))) {
        vx = 0.0;
    } else {
        x = nx;
    }
    const double ny = y + params_.dt * vy;
    if (layout_.is_wall(cell_of(x, ny))) {
        vy = 0.0;
    } else {
        y = ny;
    }
    out.next_state = {x, y, vx, vy};
    out.reward = reward_at(x, y);
    out.done = mode_ == RewardMode::sparse && in_goal(x, y);
    return out;
}

Vec ContinuousMazeEnv::waypoint(double x, double y) const {
    const Cell cell = cell_of(x, y);
    const Cell g = layout_.goal();
    const int d = layout_.distance(cell);
    if (d < 0) throw NoPathError("goal unreachable from the current cell");
    if (d == 0) return {g.col + 0.5, g.row + 0.5};
    for (int a = 0; a < 4; ++a) {
        const Cell next{cell.row + kRowStep[a], cell.col + kColStep[a]};
        if (layout_.is_wall(next)) continue;
        if (layout_.distance(next) == d - 1) return {next.col + 0.5, next.row + 0.5};
    }
    throw NoPathError("inconsistent distance table");
}

Vec ContinuousMazeEnv::expert_action(const Vec& state) const {
    if (state.size() != 4) throw StructuralError("point-maze state must have 4 components");
    const Vec w = waypoint(state[0], state[1]);
    return {clip(params_.kp * (w[0] - state[0]) - params_.kd * state[2], params_.max_force),
            clip(params_.kp * (w[1] - state[1]) - params_.kd * state[3], params_.max_force)};
}

Vec ContinuousMazeEnv::random_action(Rng& rng) const {
    const double b = params_.max_force;
    const double ax = rng.uniform(-b, b);
    const double ay = rng.uniform(-b, b);
    return {ax, ay};
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_env(const std::string& env_id, const std::optional<std::string>& layout_path) {
    const auto first = env_id.find('-');
    const auto last = env_id.rfind('-');
    if (first == std::string::npos || first == last) throw ValidationError("malformed environment id '" + env_id + "'");
    const std::string kind = env_id.substr(0, first);
    std::string name = env_id.substr(first + 1, last - first - 1);
    const RewardMode mode = parse_reward_mode(env_id.substr(last + 1));
    MazeLayout layout = layout_path ? MazeLayout::load(*layout_path) : MazeLayout::builtin(name);
    if (layout_path) name = "custom";
    if (kind == "grid") return std::make_unique<DiscreteMazeEnv>(std::move(layout), mode, 100, 0.99,
                                                                 StateEncoding::index, 1.0, name);
    if (kind == "gridxy") return std::make_unique<DiscreteMazeEnv>(std::move(layout), mode, 100, 0.99,
                                                                   StateEncoding::cell_center, 1.0, name);
    if (kind == "point") {
        ContinuousMazeParams params;
        if (name == "large") params.horizon = 600;
        return std::make_unique<ContinuousMazeEnv>(std::move(layout), mode, params, name);
    }
    throw ValidationError("unknown environment kind '" + kind + "'");
}

} // namespace bcdp
