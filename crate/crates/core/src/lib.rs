//! Deterministic simulator for a camera-guided pick-and-place arm.
//!
//! The pipeline runs from a typed operator command to a delivered object:
//! the [`command`] layer maps text to an action, [`simulator`] detects
//! objects with a geometric stand-in detector ([`detection`]), recovers the
//! grasp point through the camera model ([`geometry`]), solves joint angles
//! ([`kinematics`]) and drives the arm through a phase machine under PID
//! control ([`control`]). [`service`] exposes a running simulator over HTTP
//! and a websocket stream; [`cli`] holds the command-line entry points.
//!
//! Every random draw comes from one seeded generator, so a scenario and a
//! seed fully determine the run.

// negated float comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod command;
pub mod control;
pub mod detection;
pub mod geometry;
pub mod kinematics;
pub mod service;
pub mod simulator;
