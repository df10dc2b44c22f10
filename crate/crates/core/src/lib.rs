//! Language-driven robot navigation in a 2D simulator.
//!
//! Instructions are split into phrases, each phrase is classified as a goal,
//! a constraint, or filler by an attention bi-LSTM, goal nouns are grounded to
//! named map locations and constraint nouns to detected objects, and a global
//! RRT plus a local A* over a constraint-aware costmap drive the robot.

pub mod classifier;
pub mod geometry;
pub mod grounding;
pub mod planner;
pub mod session;
pub mod text;
pub mod world;
