use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::observation::{build_frame, observation_width, p2p_goal_obs, pf_goal_obs, FrameStack, DEFAULT_FRAMES};
use super::reward::{p2p_reward, pf_reward, pf_true_objective, P2pTerms, PfTerms, RewardWeights, TaskKind};
use super::trajectory::TrajectoryRow;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::neural::Actor;
use crate::obstacles::{ObstacleField, SfmParams};
use crate::planning::{
    build_prm, interpolate_path, plan_path, GuidancePath, Roadmap, DEFAULT_PARTIAL_WAYPOINTS, DEFAULT_REACH_RADIUS,
    DEFAULT_WAYPOINT_SPACING,
};
use crate::rng::{derive_seed, stream, SimRng, Stream};
use crate::worldsim::{
    check_collision, clearance_capped, disc_hits_map, localize, sense, step_dynamics, Action, Disc, LidarConfig,
    LidarScan, NoiseParams, OccupancyMap, Pose, RobotState, CONTROL_DT, ROBOT_RADIUS,
};

pub const DEFAULT_MAX_STEPS: usize = 500;
pub const DEFAULT_GOAL_RADIUS: f64 = 0.5;
pub const DEFAULT_CLEARANCE_THRESHOLD: f64 = 0.3;

/// Everything that defines one task instance apart from the world and scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub task: TaskKind,
    pub weights: RewardWeights,
    pub max_steps: usize,
    pub dt: f64,
    /// P2P success radius around the goal.
    pub goal_radius: f64,
    /// PF clearance penalty threshold.
    pub clearance_threshold: f64,
    pub n_partial: usize,
    pub frames: usize,
    pub lidar: LidarConfig,
    pub robot_radius: f64,
    pub waypoint_spacing: f64,
    pub reach_radius: f64,
}

impl TaskConfig {
    pub fn new(task: TaskKind) -> Self {
        Self {
            task,
            weights: RewardWeights::hand_tuned(task),
            max_steps: DEFAULT_MAX_STEPS,
            dt: CONTROL_DT,
            goal_radius: DEFAULT_GOAL_RADIUS,
            clearance_threshold: DEFAULT_CLEARANCE_THRESHOLD,
            n_partial: DEFAULT_PARTIAL_WAYPOINTS,
            frames: DEFAULT_FRAMES,
            lidar: LidarConfig::default(),
            robot_radius: ROBOT_RADIUS,
            waypoint_spacing: DEFAULT_WAYPOINT_SPACING,
            reach_radius: DEFAULT_REACH_RADIUS,
        }
    }

    pub fn with_weights(mut self, weights: RewardWeights) -> Result<Self> {
        if weights.task() != self.task {
            return Err(Error::Config(format!("reward weights are for {}, task is {}", weights.task(), self.task)));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn observation_width(&self) -> usize {
        observation_width(self.task, self.frames, self.n_partial)
    }
}

/// Start pose plus goal (P2P) or guidance path (PF).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub start: RobotState,
    pub goal: Vec2,
    pub path: Option<GuidancePath>,
}

impl Scenario {
    pub fn p2p(start: RobotState, goal: Vec2) -> Self {
        Self { start, goal, path: None }
    }

    pub fn pf(start: RobotState, path: GuidancePath) -> Self {
        Self { start, goal: path.goal(), path: Some(path) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    GoalReached,
    Collision,
    Timeout,
    PathComplete,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::GoalReached => "goal_reached",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
            Outcome::PathComplete => "path_complete",
        }
    }

    /// Terminal in the bootstrapping sense: a timeout is not.
    pub fn is_terminal(self) -> bool {
        !matches!(self, Outcome::Timeout)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "goal_reached" => Outcome::GoalReached,
            "collision" => Outcome::Collision,
            "timeout" => Outcome::Timeout,
            "path_complete" => Outcome::PathComplete,
            other => return Err(Error::Format { line: None, msg: format!("unknown outcome `{other}`") }),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub true_objective: f64,
    pub cumulative_reward: f64,
    pub steps: usize,
    pub outcome: Outcome,
    /// Initial row at t = 0 followed by one row per step.
    pub trajectory: Vec<TrajectoryRow>,
    /// Sum of true-position segment lengths, m.
    pub path_length: f64,
    /// Simulated time at termination, s.
    pub finish_time: f64,
    /// PF guidance path with its final reached flags.
    pub path: Option<GuidancePath>,
}

impl EpisodeResult {
    /// PF success means every waypoint was reached.
    pub fn success(&self) -> bool {
        self.true_objective >= 1.0
    }
}

/// What a policy sees each control step.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub task: TaskKind,
    pub observation: &'a [f64],
    pub scan: &'a LidarScan,
    pub believed: Pose,
    pub goal: Vec2,
    pub path: Option<&'a GuidancePath>,
}

pub trait Policy {
    fn act(&mut self, view: &StepView<'_>) -> Action;
}

impl<F: FnMut(&StepView<'_>) -> Action> Policy for F {
    fn act(&mut self, view: &StepView<'_>) -> Action {
        self(view)
    }
}

/// Fixed command every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPolicy(pub Action);

impl Policy for ConstantPolicy {
    fn act(&mut self, _: &StepView<'_>) -> Action {
        self.0
    }
}

impl Policy for Actor {
    fn act(&mut self, view: &StepView<'_>) -> Action {
        Actor::act(self, view.observation).expect("actor input width must match the task observation width")
    }
}

impl Policy for &Actor {
    fn act(&mut self, view: &StepView<'_>) -> Action {
        Actor::act(self, view.observation).expect("actor input width must match the task observation width")
    }
}

/// Result of one control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// Episode ended; `terminal` tells whether the end should stop bootstrapping.
    pub done: bool,
    pub terminal: bool,
    pub outcome: Option<Outcome>,
}

/// A running episode, advanced one control step at a time.
#[derive(Debug, Clone)]
pub struct Episode<'m> {
    cfg: TaskConfig,
    map: &'m OccupancyMap,
    noise: NoiseParams,
    obstacles: Option<ObstacleField>,
    state: RobotState,
    believed: Pose,
    goal: Vec2,
    path: Option<GuidancePath>,
    scan: LidarScan,
    frames: FrameStack,
    observation: Vec<f64>,
    rng_lidar: SimRng,
    rng_process: SimRng,
    rng_localize: SimRng,
    steps: usize,
    cumulative_reward: f64,
    path_length: f64,
    reached_goal: bool,
    outcome: Option<Outcome>,
    trajectory: Vec<TrajectoryRow>,
}

impl<'m> Episode<'m> {
    pub fn new(
        cfg: &TaskConfig,
        map: &'m OccupancyMap,
        scenario: Scenario,
        obstacles: Option<ObstacleField>,
        noise: NoiseParams,
        seed: u64,
    ) -> Result<Self> {
        if cfg.weights.task() != cfg.task {
            return Err(Error::Config("reward weights do not match the task".into()));
        }
        if cfg.task == TaskKind::Pf && scenario.path.as_ref().is_none_or(|p| p.is_empty()) {
            return Err(Error::Config("path-following scenario needs a non-empty guidance path".into()));
        }
        let state = scenario.start.with_radius(cfg.robot_radius);
        let mut ep = Self {
            cfg: cfg.clone(),
            map,
            noise,
            obstacles,
            state,
            believed: Pose::new(state.x, state.y, state.heading),
            goal: scenario.goal,
            path: scenario.path,
            scan: LidarScan { ranges: [0.0; crate::worldsim::BEAM_COUNT], fov: cfg.lidar.fov, max_range: cfg.lidar.max_range },
            frames: FrameStack::new(cfg.frames),
            observation: Vec::new(),
            rng_lidar: stream(seed, Stream::Lidar),
            rng_process: stream(seed, Stream::Process),
            rng_localize: stream(seed, Stream::Localize),
            steps: 0,
            cumulative_reward: 0.0,
            path_length: 0.0,
            reached_goal: false,
            outcome: None,
            trajectory: Vec::with_capacity(cfg.max_steps + 1),
        };
        ep.trajectory.push(TrajectoryRow::new(0.0, &state, Action::default(), 0.0));
        let start = state.position();
        match ep.cfg.task {
            TaskKind::P2p => {
                if (start - ep.goal).norm() < ep.cfg.goal_radius {
                    ep.reached_goal = true;
                    ep.outcome = Some(Outcome::GoalReached);
                }
            }
            TaskKind::Pf => {
                let path = ep.path.as_mut().expect("checked above");
                path.update_reached(start);
                if path.all_reached() {
                    ep.outcome = Some(Outcome::PathComplete);
                }
            }
        }
        ep.believed = localize(&ep.state, &ep.noise, &mut ep.rng_localize);
        ep.scan = ep.sense()?;
        if ep.outcome.is_none() {
            ep.push_frame()?;
        }
        Ok(ep)
    }

    fn discs(&self) -> Vec<Disc> {
        self.obstacles.as_ref().map_or_else(Vec::new, ObstacleField::discs)
    }

    fn sense(&mut self) -> Result<LidarScan> {
        let discs = self.discs();
        sense(self.map, &self.state, &discs, &self.cfg.lidar, self.noise.sigma_lidar, &mut self.rng_lidar)
    }

    fn push_frame(&mut self) -> Result<()> {
        let goal_obs = match self.cfg.task {
            TaskKind::P2p => p2p_goal_obs(&self.believed, self.goal).to_vec(),
            TaskKind::Pf => pf_goal_obs(&self.believed, self.path.as_ref().expect("pf path"), self.cfg.n_partial)?,
        };
        self.frames.push(build_frame(&self.scan, &goal_obs));
        self.observation = self.frames.observation();
        Ok(())
    }

    /// Current stacked observation. Empty once the episode ended at setup.
    pub fn observation(&self) -> &[f64] {
        &self.observation
    }

    pub fn view(&self) -> StepView<'_> {
        StepView {
            task: self.cfg.task,
            observation: &self.observation,
            scan: &self.scan,
            believed: self.believed,
            goal: self.goal,
            path: self.path.as_ref(),
        }
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn obstacles(&self) -> Option<&ObstacleField> {
        self.obstacles.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    /// Apply one action. Panics if the episode already ended.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        assert!(self.outcome.is_none(), "step called on a finished episode");
        let action = action.clamped();
        let prev = self.state.position();
        self.state = step_dynamics(&self.state, action, self.cfg.dt, &self.noise, &mut self.rng_process);
        let robot_disc = self.state.disc();
        if let Some(field) = self.obstacles.as_mut() {
            field.step(self.map, Some(&robot_disc), self.cfg.dt);
        }
        let discs = self.discs();
        let collision = check_collision(self.map, &self.state, &discs);
        let clearance = clearance_capped(self.map, &self.state, &discs, self.cfg.lidar.max_range);
        self.path_length += (self.state.position() - prev).norm();
        self.believed = localize(&self.state, &self.noise, &mut self.rng_localize);
        self.steps += 1;

        let pos = self.state.position();
        let (reward, complete) = match self.cfg.task {
            TaskKind::P2p => {
                let reached = (pos - self.goal).norm() < self.cfg.goal_radius;
                self.reached_goal |= reached;
                let terms = P2pTerms {
                    goal_distance: (self.believed.position() - self.goal).norm(),
                    collision,
                    angular_speed: action.w,
                    clearance,
                    reached_goal: reached,
                };
                (p2p_reward(&terms, self.cfg.weights.as_slice())?, reached)
            }
            TaskKind::Pf => {
                let path = self.path.as_mut().expect("pf path");
                path.update_reached(pos);
                let waypoint_distance =
                    path.first_unreached().map_or(0.0, |i| (self.believed.position() - path.waypoints()[i]).norm());
                let done = path.all_reached();
                let terms = PfTerms { waypoint_distance, collision, clearance };
                (pf_reward(&terms, self.cfg.weights.as_slice(), self.cfg.clearance_threshold)?, done)
            }
        };
        self.cumulative_reward += reward;
        let t = self.steps as f64 * self.cfg.dt;
        self.trajectory.push(TrajectoryRow::new(t, &self.state, action, reward));

        let outcome = if collision {
            Some(Outcome::Collision)
        } else if complete {
            Some(match self.cfg.task {
                TaskKind::P2p => Outcome::GoalReached,
                TaskKind::Pf => Outcome::PathComplete,
            })
        } else if self.steps >= self.cfg.max_steps {
            Some(Outcome::Timeout)
        } else {
            None
        };
        // The next observation is still needed after a timeout for bootstrapping.
        if matches!(outcome, None | Some(Outcome::Timeout)) {
            self.scan = self.sense()?;
            self.push_frame()?;
        }
        self.outcome = outcome;
        Ok(StepOutcome {
            reward,
            done: outcome.is_some(),
            terminal: outcome.is_some_and(Outcome::is_terminal),
            outcome,
        })
    }

    pub fn into_result(self) -> EpisodeResult {
        let outcome = self.outcome.unwrap_or(Outcome::Timeout);
        let true_objective = match self.cfg.task {
            TaskKind::P2p => f64::from(u8::from(self.reached_goal)),
            TaskKind::Pf => pf_true_objective(self.path.as_ref().expect("pf path")),
        };
        EpisodeResult {
            true_objective,
            cumulative_reward: self.cumulative_reward,
            steps: self.steps,
            outcome,
            trajectory: self.trajectory,
            path_length: self.path_length,
            finish_time: self.steps as f64 * self.cfg.dt,
            path: self.path,
        }
    }
}

/// Run a full episode with `policy` until termination or `cfg.max_steps`.
pub fn run_episode<P: Policy + ?Sized>(
    cfg: &TaskConfig,
    map: &OccupancyMap,
    scenario: Scenario,
    obstacles: Option<ObstacleField>,
    policy: &mut P,
    noise: NoiseParams,
    seed: u64,
) -> Result<EpisodeResult> {
    let mut ep = Episode::new(cfg, map, scenario, obstacles, noise, seed)?;
    while !ep.is_done() {
        let action = policy.act(&ep.view());
        ep.step(action)?;
    }
    Ok(ep.into_result())
}

/// Static world shared by many episodes.
#[derive(Debug, Clone)]
pub struct World {
    pub map: Arc<OccupancyMap>,
    pub roadmap: Option<Arc<Roadmap>>,
}

pub const DEFAULT_PRM_SAMPLES: usize = 400;
pub const DEFAULT_PRM_CONNECT_RADIUS: f64 = 2.5;

impl World {
    pub fn without_roadmap(map: OccupancyMap) -> Self {
        Self { map: Arc::new(map), roadmap: None }
    }

    pub fn with_roadmap(map: OccupancyMap, samples: usize, connect_radius: f64, seed: u64) -> Self {
        let roadmap = build_prm(&map, samples, connect_radius, ROBOT_RADIUS, seed);
        Self { map: Arc::new(map), roadmap: Some(Arc::new(roadmap)) }
    }
}

/// How episodes are drawn from a world.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Start–goal Euclidean distance range, m. PF only uses the minimum.
    pub min_distance: f64,
    pub max_distance: f64,
    pub obstacles: usize,
    pub sfm: SfmParams,
    /// Extra free margin around start and goal beyond the robot radius.
    pub margin: f64,
}

impl ScenarioSpec {
    pub fn p2p_default() -> Self {
        Self { min_distance: 5.0, max_distance: 10.0, obstacles: 0, sfm: SfmParams::default(), margin: 0.1 }
    }

    pub fn pf_default() -> Self {
        Self { min_distance: 35.0, max_distance: f64::INFINITY, obstacles: 0, sfm: SfmParams::default(), margin: 0.1 }
    }
}

const SAMPLE_ATTEMPTS: usize = 20_000;

fn free_point<R: Rng + ?Sized>(map: &OccupancyMap, clearance: f64, rng: &mut R) -> Option<Vec2> {
    let (w, h) = map.extent();
    (0..SAMPLE_ATTEMPTS)
        .map(|_| Vec2::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h)))
        .find(|p| !disc_hits_map(map, *p, clearance))
}

/// Random collision-free start and goal with distance in the given range.
pub fn sample_p2p<R: Rng + ?Sized>(
    map: &OccupancyMap,
    cfg: &TaskConfig,
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Result<Scenario> {
    let r = cfg.robot_radius + spec.margin;
    for _ in 0..200 {
        let Some(start) = free_point(map, r, rng) else { break };
        for _ in 0..200 {
            let Some(goal) = free_point(map, r, rng) else { break };
            let d = (goal - start).norm();
            if d >= spec.min_distance && d <= spec.max_distance {
                let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                return Ok(Scenario::p2p(RobotState::new(start.x, start.y, heading).with_radius(cfg.robot_radius), goal));
            }
        }
    }
    Err(Error::Config(format!(
        "could not sample a start/goal pair {}..{} m apart on this map",
        spec.min_distance, spec.max_distance
    )))
}

/// Random start and goal at least `spec.min_distance` apart joined by an
/// interpolated PRM path.
pub fn sample_pf<R: Rng + ?Sized>(
    map: &OccupancyMap,
    roadmap: &Roadmap,
    cfg: &TaskConfig,
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Result<Scenario> {
    let r = cfg.robot_radius + spec.margin;
    let mut last_err = Error::NoPath;
    for _ in 0..500 {
        let (Some(start), Some(goal)) = (free_point(map, r, rng), free_point(map, r, rng)) else { break };
        let d = (goal - start).norm();
        if d < spec.min_distance || d > spec.max_distance {
            continue;
        }
        match plan_path(roadmap, map, start, goal) {
            Ok(raw) => {
                let path = interpolate_path(&raw, cfg.waypoint_spacing, cfg.reach_radius);
                let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                return Ok(Scenario::pf(RobotState::new(start.x, start.y, heading).with_radius(cfg.robot_radius), path));
            }
            Err(e) => last_err = e,
        }
    }
    match last_err {
        Error::NoPath => Err(Error::NoPath),
        e => Err(e),
    }
}

/// Deterministic scenario and obstacle field for `seed`.
pub fn sample_episode(
    world: &World,
    cfg: &TaskConfig,
    spec: &ScenarioSpec,
    seed: u64,
) -> Result<(Scenario, Option<ObstacleField>)> {
    let mut rng = stream(seed, Stream::Scenario);
    let scenario = match cfg.task {
        TaskKind::P2p => sample_p2p(&world.map, cfg, spec, &mut rng)?,
        TaskKind::Pf => {
            let roadmap = world.roadmap.as_ref().ok_or_else(|| Error::Config("path following needs a roadmap".into()))?;
            sample_pf(&world.map, roadmap, cfg, spec, &mut rng)?
        }
    };
    let obstacles = if spec.obstacles == 0 {
        None
    } else {
        let roadmap = world
            .roadmap
            .as_ref()
            .ok_or_else(|| Error::Config("moving obstacles need a roadmap".into()))?
            .clone();
        let keep_out = [
            Disc { center: scenario.start.position(), radius: cfg.robot_radius + 0.7 },
            Disc { center: scenario.goal, radius: cfg.robot_radius + 0.2 },
        ];
        Some(ObstacleField::spawn(
            &world.map,
            roadmap,
            spec.obstacles,
            &keep_out,
            spec.sfm.clone(),
            derive_seed(seed, Stream::Obstacles as u64),
        )?)
    };
    Ok((scenario, obstacles))
}
