mod common;

use std::fs;

use serde_json::json;
use storyforge::clients::mock::{MockImages, ScriptedTransport};
use storyforge::clients::{
    ChatBackend, ChatRequest, FixtureMode, FixtureStore, Fixtured, HttpResponse, OpenAiChat, RetryPolicy,
};
use storyforge::pipeline::{run_pipeline, PipelineConfig};

const KEY: &str = "sk-live-0123456789abcdefSECRET";

fn ok(content: &str) -> HttpResponse {
    HttpResponse { status: 200, body: json!({"choices": [{"message": {"content": content}}]}).to_string() }
}

fn chat(transport: &ScriptedTransport) -> OpenAiChat<&ScriptedTransport> {
    let mut c = OpenAiChat::with_transport("http://llm.invalid", Some(KEY.to_string()), transport);
    c.retry = RetryPolicy::no_delay();
    c
}

#[test]
fn key_reaches_the_wire_only_as_bearer() {
    let t = ScriptedTransport::repeating(ok("hi"));
    let c = chat(&t);
    let req = ChatRequest {
        model: "m".into(),
        system: "s".into(),
        user: "u".into(),
        temperature: 0.7,
        max_tokens: None,
        seed: None,
    };
    c.chat_complete(&req).unwrap();
    let call = &t.calls()[0];
    assert_eq!(call.bearer.as_deref(), Some(KEY));
    assert!(!call.body.to_string().contains(KEY));
    assert!(!format!("{c:?}").contains(KEY));
}

#[test]
fn echoed_key_is_scrubbed_from_errors() {
    let echo = HttpResponse { status: 401, body: format!("invalid key: Bearer {KEY}") };
    let t = ScriptedTransport::new(vec![Ok(echo)]);
    let req = ChatRequest {
        model: "m".into(),
        system: "s".into(),
        user: "u".into(),
        temperature: 0.7,
        max_tokens: None,
        seed: None,
    };
    let err = chat(&t).chat_complete(&req).unwrap_err();
    assert!(!err.to_string().contains(KEY), "{err}");
    assert!(!format!("{err:?}").contains(KEY));
}

#[test]
fn recorded_run_holds_no_secret() {
    let tmp = tempfile::tempdir().unwrap();
    let fixtures = tmp.path().join("fixtures");
    let out = tmp.path().join("runs");

    // Sends every request over an HTTP transport carrying the key, then
    // answers from the scripted story.
    struct Relay {
        inner: storyforge::clients::mock::ScriptedChat,
        transport: ScriptedTransport,
    }
    impl ChatBackend for Relay {
        fn chat_complete(&self, req: &ChatRequest) -> Result<String, storyforge::clients::ClientError> {
            let text = self.inner.chat_complete(req)?;
            let mut c = OpenAiChat::with_transport("http://llm.invalid", Some(KEY.to_string()), &self.transport);
            c.retry = RetryPolicy::no_delay();
            let _ = c.chat_complete(req);
            Ok(text)
        }
    }
    let relay = Relay { inner: common::preeti::scripted_chat(), transport: ScriptedTransport::repeating(ok("x")) };
    let store = FixtureStore::new(&fixtures, FixtureMode::Record);
    let llm = Fixtured::new(relay, store.clone());
    let images = Fixtured::new(MockImages::default(), store);
    let run = run_pipeline(&common::preeti::prompt(), &PipelineConfig::default(), &llm, Some(&images), &out).unwrap();
    assert!(!llm_calls_empty(&fixtures));

    for dir in [&fixtures, &run.dir] {
        for (path, bytes) in common::snapshot(dir) {
            let text = String::from_utf8_lossy(&bytes);
            assert!(!text.contains(KEY), "{path} leaks the key");
            assert!(!text.contains("Bearer"), "{path} holds an auth header");
        }
    }
}

fn llm_calls_empty(dir: &std::path::Path) -> bool {
    fs::read_dir(dir).map(|d| d.count() == 0).unwrap_or(true)
}

#[test]
fn shipped_files_hold_no_key_shaped_strings() {
    let re = regex::Regex::new(r"sk-[A-Za-z0-9]{20,}").unwrap();
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    for sub in ["fixtures", "templates", "tests/golden"] {
        for (path, bytes) in common::snapshot(&root.join(sub)) {
            assert!(!re.is_match(&String::from_utf8_lossy(&bytes)), "{sub}/{path}");
        }
    }
}
