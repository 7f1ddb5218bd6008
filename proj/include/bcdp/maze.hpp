#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bcdp/mdp.hpp"
#include "bcdp/rng.hpp"

namespace bcdp {

using Vec = std::vector<double>;

struct Cell {
    int row = 0;
    int col = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Grid of wall/open cells with a set of start cells and one goal cell.
///
/// Row 0 is the top line of the text form. Continuous coordinates put the
/// cell (row, col) at x in [col, col+1), y in [row, row+1).
class MazeLayout {
public:
    MazeLayout(int width, int height, std::vector<bool> walls, std::vector<Cell> start_cells, Cell goal);

    /// Text form: '#' wall, '.' open, 'S' start (open), 'G' goal (open), one row per line.
    static MazeLayout parse(const std::string& text);
    static MazeLayout load(const std::string& path);
    /// Built-ins: "corridor" (1x3), "umaze", "medium", "large".
    static MazeLayout builtin(const std::string& name);

    std::string to_text() const;

    int width() const { return width_; }
    int height() const { return height_; }
    bool is_wall(Cell c) const;
    bool is_open(Cell c) const { return !is_wall(c); }
    const std::vector<Cell>& start_cells() const { return starts_; }
    Cell goal() const { return goal_; }

    /// Open cells in row-major order; position in this list is the tabular state index.
    const std::vector<Cell>& open_cells() const { return open_; }
    int open_index(Cell c) const;

    /// BFS step counts to the goal over 4-connected open cells; -1 where unreachable.
    const std::vector<int>& distance_to_goal() const { return dist_; }
    int distance(Cell c) const { return dist_[static_cast<std::size_t>(open_index(c))]; }

private:
    int width_;
    int height_;
    std::vector<bool> walls_;
    std::vector<Cell> starts_;
    Cell goal_;
    std::vector<Cell> open_;
    std::vector<int> open_lookup_;
    std::vector<int> dist_;
};

enum class RewardMode { sparse, dense };

std::string to_string(RewardMode mode);
RewardMode parse_reward_mode(const std::string& text);

/// Discrete actions, in BFS tie-break order.
enum GridAction : int { up = 0, down = 1, left = 2, right = 3, stay = 4 };
inline constexpr int kGridActions = 5;

struct EnvStep {
    Vec next_state;
    double reward = 0.0;
    bool done = false;
};

/// Common interface for rollouts, data generation, and evaluation.
///
/// States and actions travel as plain vectors; discrete actions are a
/// length-1 vector holding the action index.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string id() const = 0;
    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual bool discrete_actions() const = 0;
    /// Number of discrete actions, or 0 for continuous control.
    virtual int n_actions() const = 0;
    /// Half-width of the continuous action box (unused for discrete).
    virtual double action_bound() const { return 1.0; }
    /// Encoding tag recorded in dataset headers.
    virtual std::string state_encoding() const = 0;
    virtual int horizon() const = 0;
    virtual RewardMode reward_mode() const = 0;

    virtual Vec reset(Rng& rng) const = 0;
    Vec reset(std::uint64_t seed) const {
        Rng rng(seed);
        return reset(rng);
    }
    virtual EnvStep step(const Vec& state, const Vec& action) const = 0;
    virtual Vec expert_action(const Vec& state) const = 0;
    virtual Vec random_action(Rng& rng) const = 0;

    /// Planar (x, y) coordinates of a state, used for distance metrics.
    virtual Vec position(const Vec& state) const = 0;
};

enum class StateEncoding { index, cell_center };

class DiscreteMazeEnv final : public Environment {
public:
    DiscreteMazeEnv(MazeLayout layout, RewardMode mode, int horizon = 100, double gamma = 0.99,
                    StateEncoding encoding = StateEncoding::index, double dense_scale = 1.0,
                    std::string name = "custom");

    std::string id() const override;
    int state_dim() const override { return encoding_ == StateEncoding::index ? 1 : 2; }
    int action_dim() const override { return 1; }
    bool discrete_actions() const override { return true; }
    int n_actions() const override { return kGridActions; }
    std::string state_encoding() const override;
    int horizon() const override { return horizon_; }
    RewardMode reward_mode() const override { return mode_; }

    using Environment::reset;
    Vec reset(Rng& rng) const override;
    EnvStep step(const Vec& state, const Vec& action) const override;
    Vec expert_action(const Vec& state) const override;
    Vec random_action(Rng& rng) const override;
    Vec position(const Vec& state) const override;

    const MazeLayout& layout() const { return layout_; }
    double gamma() const { return gamma_; }
    StateEncoding encoding() const { return encoding_; }

    Cell decode(const Vec& state) const;
    Vec encode(Cell cell) const;
    /// Deterministic successor cell; moves into walls or off-grid leave the cell unchanged.
    Cell move(Cell cell, int action) const;
    double reward_at(Cell cell) const;
    int expert_move(Cell cell) const;

    /// One MDP state per open cell, 5 actions, goal absorbing in sparse mode.
    TabularMDP to_tabular() const;

private:
    MazeLayout layout_;
    RewardMode mode_;
    int horizon_;
    double gamma_;
    StateEncoding encoding_;
    double dense_scale_;
    std::string name_;
};

struct ContinuousMazeParams {
    double dt = 0.1;
    double damping = 0.2;
    double max_force = 1.0;
    double goal_radius = 0.3;
    int horizon = 300;
    double kp = 5.0;
    double kd = 1.0;
    double reset_jitter = 0.1;
    double dense_scale = 1.0;
};

/// Point mass with state (x, y, vx, vy) and a 2-D force action.
class ContinuousMazeEnv final : public Environment {
public:
    ContinuousMazeEnv(MazeLayout layout, RewardMode mode, ContinuousMazeParams params = {},
                      std::string name = "custom");

    std::string id() const override;
    int state_dim() const override { return 4; }
    int action_dim() const override { return 2; }
    bool discrete_actions() const override { return false; }
    int n_actions() const override { return 0; }
    double action_bound() const override { return params_.max_force; }
    std::string state_encoding() const override { return "continuous"; }
    int horizon() const override { return params_.horizon; }
    RewardMode reward_mode() const override { return mode_; }

    using Environment::reset;
    Vec reset(Rng& rng) const override;
    EnvStep step(const Vec& state, const Vec& action) const override;
    Vec expert_action(const Vec& state) const override;
    Vec random_action(Rng& rng) const override;
    Vec position(const Vec& state) const override { return {state.at(0), state.at(1)}; }

    const MazeLayout& layout() const { return layout_; }
    const ContinuousMazeParams& params() const { return params_; }

    Cell cell_of(double x, double y) const;
    bool in_goal(double x, double y) const;
    double reward_at(double x, double y) const;
    /// Target point the expert steers toward from (x, y).
    Vec waypoint(double x, double y) const;

private:
    MazeLayout layout_;
    RewardMode mode_;
    ContinuousMazeParams params_;
    std::string name_;
};

/// Builds an environment from an id of the form "<grid|point>-<layout>-<sparse|dense>".
/// `layout_path`, when given, replaces the named layout (the layout token becomes "custom").
std::unique_ptr<Environment> make_env(const std::string& env_id, const std::optional<std::string>& layout_path = {});

} // namespace bcdp
