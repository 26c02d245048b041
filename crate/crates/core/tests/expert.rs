use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use hetuav::config::ScenarioConfig;
use hetuav::env::{read_transitions, write_transitions, Direction, Env, PrecodingMode};
use hetuav::error::Error;
use hetuav::expert::{
    collect_dataset, episode_fading_seed, load_dataset, partition_by_agent, CollectConfig, ExpertProvider, HttpExpert,
    HttpExpertConfig, ScriptedExpert, DEFAULT_TEMPLATE,
};

/// Serves one canned chat answer per connection and records request bodies.
fn mock_server(answers: Vec<String>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    std::thread::spawn(move || {
        for answer in answers {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(String::from_utf8(body).unwrap());
            let payload = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": answer}}]}).to_string();
            let mut out = stream;
            write!(
                out,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn http_config(url: String) -> HttpExpertConfig {
    HttpExpertConfig {
        url,
        api_key: Some("test-key".into()),
        model: "mock".into(),
        timeout: Duration::from_secs(10),
        max_attempts: 2,
        template: DEFAULT_TEMPLATE.to_string(),
        keep_raw: true,
    }
}

fn desk_env() -> Env {
    let mut env = Env::new(ScenarioConfig::default(), PrecodingMode::S2dc).unwrap();
    env.reset_with(30, 1, 0);
    env
}

#[test]
fn http_expert_parses_answers() {
    let (url, seen) = mock_server(vec!["Plan:\nUAV 1: up, level 2\nUAV 2: still".into()]);
    let env = desk_env();
    let mut expert = HttpExpert::new(http_config(url));
    let decision = expert.act(&env.summary(), env.action_spec()).unwrap();
    let spec = env.action_spec();
    assert_eq!(decision.actions, vec![spec.encode(Direction::Up, 2).unwrap(), spec.encode(Direction::Still, 0).unwrap()]);
    assert!(!decision.fallback);
    let body: serde_json::Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["model"], "mock");
    assert!(body["messages"][0]["content"].as_str().unwrap().contains("UAV 2"));
}

#[test]
fn http_expert_falls_back_after_bad_answers() {
    let (url, seen) = mock_server(vec!["I would rather not.".into(), "UAV 1: sideways".into()]);
    let env = desk_env();
    let mut expert = HttpExpert::new(http_config(url));
    let decision = expert.act(&env.summary(), env.action_spec()).unwrap();
    assert!(decision.fallback);
    assert_eq!(decision.actions.len(), 2);
    assert_eq!(seen.lock().unwrap().len(), 2);
    assert_eq!(expert.raw_log.len(), 2);
}

#[test]
fn http_transport_failure_is_an_error() {
    // bind then drop so nothing listens on the port
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let env = desk_env();
    let mut expert = HttpExpert::new(http_config(format!("http://127.0.0.1:{port}/v1/chat/completions")));
    assert!(matches!(expert.act(&env.summary(), env.action_spec()), Err(Error::Provider(_))));
}

fn small_collect() -> CollectConfig {
    CollectConfig {
        episodes: 3,
        seed: 77,
        layout_seed: 30,
        ..CollectConfig::default()
    }
}

fn cheap_scenario() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.n_slots = 6;
    cfg.s2dc.n_iter = 2;
    cfg
}

#[test]
fn dataset_is_deterministic_with_full_arity() {
    let collect = || {
        let mut env = Env::new(cheap_scenario(), PrecodingMode::S2dc).unwrap();
        collect_dataset(&mut ScriptedExpert::default(), &mut env, &small_collect()).unwrap()
    };
    let a = collect();
    assert_eq!(a, collect());
    assert_eq!(a.len(), 3 * 6 * 2);
    let parts = partition_by_agent(&a, 2).unwrap();
    assert!(parts.iter().all(|p| p.len() == 18));
    assert!(a.iter().all(|t| !t.fallback));
    assert_eq!(a.iter().filter(|t| t.done).count(), 3 * 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    write_transitions(&path, &a).unwrap();
    assert_eq!(read_transitions(&path).unwrap(), a);
    let env = Env::new(cheap_scenario(), PrecodingMode::S2dc).unwrap();
    assert_eq!(load_dataset(&path, env.obs_dim(), env.n_actions()).unwrap(), a);
    assert!(load_dataset(&path, env.obs_dim() + 1, env.n_actions()).is_err());
}

#[test]
fn recorded_rewards_replay_exactly() {
    let cfg = small_collect();
    let mut env = Env::new(cheap_scenario(), PrecodingMode::S2dc).unwrap();
    let data = collect_dataset(&mut ScriptedExpert::default(), &mut env, &CollectConfig { start_jitter: 0.0, ..cfg }).unwrap();
    let mut replay = Env::new(cheap_scenario(), PrecodingMode::S2dc).unwrap();
    for episode in 0..cfg.episodes {
        replay.reset_with(cfg.layout_seed, episode_fading_seed(cfg.seed, episode), episode);
        let recorded: Vec<_> = data.iter().filter(|t| t.episode == episode).collect();
        for t in 0..6 {
            let slot: Vec<_> = recorded.iter().filter(|r| r.t == t).collect();
            let actions: Vec<usize> = slot.iter().map(|r| r.action).collect();
            let step = replay.step(&actions).unwrap();
            for (r, fresh) in slot.iter().zip(&step.transitions) {
                assert_eq!(r.reward.to_bits(), fresh.reward.to_bits());
                assert_eq!(r.next_obs, fresh.next_obs);
            }
        }
    }
}

#[test]
fn failing_provider_episodes_are_dropped() {
    struct Flaky(usize);
    impl ExpertProvider for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn act(&mut self, s: &hetuav::env::EnvSummary, spec: &hetuav::env::ActionSpec) -> hetuav::Result<hetuav::expert::ExpertDecision> {
            self.0 += 1;
            if s.t == 2 && self.0 < 7 {
                return Err(Error::Provider("rate limited".into()));
            }
            ScriptedExpert::default().act(s, spec)
        }
    }
    let mut env = Env::new(cheap_scenario(), PrecodingMode::S2dc).unwrap();
    let data = collect_dataset(&mut Flaky(0), &mut env, &small_collect()).unwrap();
    // both tries of episode 0 fail at t = 2; later episodes go through
    assert_eq!(data.len(), 2 * 6 * 2);
    assert!(data.iter().all(|t| t.episode != 0));
}
