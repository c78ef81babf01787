mod common;

use std::time::Duration;

use base64::Engine as _;
use semnav::gridworld::{parse_scenario, Heading};
use semnav::harness::{run_episode_with, EpisodeConfig};
use semnav::scorer::{
    likelihood_prompt, render_depth_png, ExternalScorer, Observation, ScoreRequest, Scorer, ScorerError,
};
use semnav::{AgentPose, SensorConfig, PROB_EPSILON};

use common::{text_reply, StubServer};

const CORRIDOR: &str = "semnav-scenario v1
12 5 0.25
############
#S.........#
#..........#
#.........T#
############
target_label: chair
";

fn client(url: &str) -> ExternalScorer {
    ExternalScorer::with_key(url, Duration::from_secs(5), Some("test-key".into()))
        .unwrap()
        .model("stub-model")
}

/// Score of the first step of a one-step episode against `reply`.
fn first_step_score(status: u16, reply: &str) -> (f64, Vec<(Vec<String>, String)>) {
    let server = StubServer::start(vec![(status, reply.to_string())]);
    let world = parse_scenario(CORRIDOR).unwrap();
    let cfg = EpisodeConfig {
        max_steps: 1,
        ..EpisodeConfig::default()
    };
    let scorer = client(&server.url);
    let r = run_episode_with(&world, &cfg, &scorer, None).unwrap();
    (r.trace[0].score, server.join())
}

#[test]
fn bare_float_reply() {
    let (score, _) = first_step_score(200, &text_reply("0.73"));
    assert_eq!(score, 0.73);
}

#[test]
fn embedded_float_reply() {
    let (score, _) = first_step_score(200, &text_reply("The likelihood is about 0.42 given the hallway."));
    assert_eq!(score, 0.42);
}

#[test]
fn garbage_reply_falls_back_to_floor() {
    let (score, _) = first_step_score(200, &text_reply("I cannot tell from this image."));
    assert_eq!(score, PROB_EPSILON);
}

#[test]
fn out_of_range_reply_is_clamped() {
    assert_eq!(first_step_score(200, &text_reply("1.7")).0, 1.0);
    assert_eq!(first_step_score(200, &text_reply("-0.2")).0, 0.0);
}

#[test]
fn server_errors_and_bad_bodies_fall_back() {
    assert_eq!(first_step_score(500, "{}").0, PROB_EPSILON);
    assert_eq!(first_step_score(200, "not json").0, PROB_EPSILON);
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let scorer = client(&url);
    let req = ScoreRequest {
        target_label: "chair".into(),
        observation: Observation::Image(vec![1, 2, 3]),
        pose: AgentPose::new(0.0, 0.0, Heading::EAST),
    };
    assert!(matches!(scorer.score(&req), Err(ScorerError::Unavailable(_))));
}

#[test]
fn request_follows_wire_format() {
    let (_, requests) = first_step_score(200, &text_reply("0.5"));
    assert_eq!(requests.len(), 1);
    let (headers, body) = &requests[0];
    assert!(headers[0].starts_with("POST /v1/complete"));
    assert!(headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer test-key")));
    let json: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(json["model"], "stub-model");
    assert_eq!(json["prompt"], likelihood_prompt("chair"));
    assert_eq!(json["temperature"], 0.0);
    let png = base64::engine::general_purpose::STANDARD
        .decode(json["image_b64"].as_str().unwrap())
        .unwrap();
    assert!(png.starts_with(b"\x89PNG\r\n\x1a\n"));
    let world = parse_scenario(CORRIDOR).unwrap();
    let expected = render_depth_png(&world.sense_depth(world.start, &SensorConfig::default()));
    assert_eq!(png, expected);
}

#[test]
fn scan_payload_is_rejected() {
    let scorer = client("http://127.0.0.1:9/");
    let world = parse_scenario(CORRIDOR).unwrap();
    let req = ScoreRequest {
        target_label: "chair".into(),
        observation: Observation::Scan(world.sense_depth(world.start, &SensorConfig::default())),
        pose: world.start,
    };
    assert!(matches!(scorer.score(&req), Err(ScorerError::WrongPayload)));
}
