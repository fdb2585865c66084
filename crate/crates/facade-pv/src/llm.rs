//! Layout reasoning through a chat-completion endpoint.
//!
//! The four-step prompt is rendered from a facade, the reply is scanned for
//! the `installable_rectangles` object, and every proposal is checked against
//! the facade before it is accepted. Rejected replies are retried with a
//! one-line note on what was wrong; when attempts run out the deterministic
//! layout is used instead.

use std::collections::BTreeMap;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use facade_pv_core::facade::ComponentClass;
use facade_pv_core::layout::{
    deterministic_layout, inset_walls, partition, qualify, validate_in_region, validate_layout, LayoutViolation,
};
use facade_pv_core::{BoundingBox, FacadeDescription, LayoutConstraints, LayoutResult, Provenance};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::io::format_coord;

pub const SYSTEM_ROLE: &str = "You are an expert civil engineer specializing in Building-Integrated Photovoltaics (BIPV). Your task is to determine the optimal layout for PV panels on a building facade based on provided geometric and semantic data. You must strictly follow all instructions and output formats.";

const TASK_TEMPLATE: &str = r#"Task: Given the dimensions of a building facade and the locations of obstructions (windows, doors, balconies, etc.), identify all possible rectangular areas suitable for PV installation.

Step 1: Understand Metric Canvas (Provided for Context)
The building facade image has been rectified to a front-on view. The relevant parameters are:
- Real-world dimensions: width = {w_m} meters, height = {h_m} meters.
- Pixel dimensions: width = {w_px} pixels, height = {h_px} pixels.
- The scale is: x-direction: {w_m} meters/{w_px}, y-direction: {h_m} meters/{h_px}.
All following coordinates are in pixels, with the origin (0, 0) at the top-left corner of the rectified image. To the right is the positive x direction and down is the positive y direction.

Step 2: Identify Obstructions (Provided Semantic Layout)
The wall that may carry panels is: {wall_boxes}.
The following are obstructions on the facade where PV panels cannot be installed. They are provided as lists of bounding boxes, each defined by [x1, y1, x2, y2], representing the top-left (x1, y1) and bottom-right (x2, y2) pixel coordinates:
- Windows: {window_boxes}
- Doors: {door_boxes}
- Balconies: {balcony_boxes}
- Other obstructions: {other_boxes}
Note: If a list is empty, it means no such obstructions were detected.

Step 3: Partition Usable Wall Area
Your primary goal is to analyze the remaining "wall" area (i.e., total facade area minus all areas occupied by the obstructions from Step 2). You must subdivide this available wall space into a set of non-overlapping rectangular regions suitable for potential PV installation. The following critical rules apply:
(a) Maximize Area per Region: Each identified rectangular region should be as large as possible. Minimize the total number of rectangles by favoring larger, contiguous PV arrays.
(b) Mutual Exclusivity and Obstruction Avoidance: The generated rectangular regions must not overlap with any of the obstruction bounding boxes from Step 2, nor with each other.
(c) Comprehensive Coverage: The set of identified rectangular regions should aim to cover as much of the available, unobstructed wall surface as possible.
(d) Merging for Optimization: If merging two or more adjacent, smaller valid sub-regions (that individually satisfy all rules) results in a larger valid rectangular region without violating exclusivity or obstruction rules, this merge operation should be performed. For example, [0,0,100,150] and [0,150,100,450] can be merged into [0,0,100,450].

Step 4: Qualify Rectangles for PV Installation
From the list of potential wall rectangles generated in Step 3, filter them based on practical PV module installation constraints. A rectangle is considered suitable for PV installation only if it meets both of the following dimensional criteria (converted to real-world meters using the scale factor from Step 1):
- The shorter side (width or height) is at least {min_short_edge_m} meters.
- The longer side (width or height) is at least {min_long_edge_m} meters.
Rectangles failing to meet either criterion must be discarded.

Output Format:
Provide your final answer strictly as a JSON object. This object should have a single key named "installable_rectangles", whose value is a list of valid rectangular areas that passed all criteria in Step 4. Each rectangle in the list must be represented by its pixel coordinates in the format [x1, y1, x2, y2]. If no rectangles are found to be suitable, return an empty list for "installable_rectangles".

Example of a valid output:
{
  "installable_rectangles": [
    [150, 50, 300, 400],
    [550, 50, 700, 400],
    [50, 450, 700, 600]
  ]
}

Example if no suitable areas are found:
{
  "installable_rectangles": []
}

Begin your analysis now."#;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system_role: String,
    pub task_text: String,
    pub placeholders: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReasonError {
    #[error("facade scale is not usable")]
    MissingScale,
    #[error("no JSON object with key installable_rectangles in the response")]
    MalformedResponse,
    #[error("bad installable_rectangles entry {index}: {reason}")]
    SchemaViolation { index: usize, reason: String },
    #[error("transport: {0}")]
    Transport(String),
}

fn boxes(prefix: &str, list: &[BoundingBox]) -> String {
    if list.is_empty() {
        return "[]".into();
    }
    list.iter()
        .enumerate()
        .map(|(i, b)| {
            format!(
                "{prefix}{}: [{},{},{},{}]",
                i + 1,
                format_coord(b.x_min),
                format_coord(b.y_min),
                format_coord(b.x_max),
                format_coord(b.y_max)
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn clipped_to(wall: &BoundingBox, list: Vec<BoundingBox>) -> Vec<BoundingBox> {
    list.iter().filter_map(|b| b.intersection(wall)).collect()
}

/// Renders the prompt for one wall of `facade`; obstructions are those
/// overlapping that wall, clipped to it.
pub fn build_prompt_for_wall(
    facade: &FacadeDescription,
    wall: &BoundingBox,
    c: &LayoutConstraints,
) -> Result<PromptBundle, ReasonError> {
    let s = facade.scale();
    if !(s.s > 0.0 && s.s_y > 0.0 && s.s.is_finite() && s.s_y.is_finite()) {
        return Err(ReasonError::MissingScale);
    }
    let of = |class| clipped_to(wall, facade.boxes_of(class));
    let mut other = of(ComponentClass::Other);
    other.extend(of(ComponentClass::Roof));
    let mut map = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        map.insert(k.to_string(), v);
    };
    put("w_m", format_coord(facade.width_m()));
    put("h_m", format_coord(facade.height_m()));
    put("w_px", format_coord(facade.width_px()));
    put("h_px", format_coord(facade.height_px()));
    put("min_short_edge_m", format!("{:?}", c.min_short_edge_m));
    put("min_long_edge_m", format!("{:?}", c.min_long_edge_m));
    put("wall_boxes", boxes("wall", std::slice::from_ref(wall)));
    put("window_boxes", boxes("window", &of(ComponentClass::Window)));
    put("door_boxes", boxes("door", &of(ComponentClass::Door)));
    put("balcony_boxes", boxes("balcony", &of(ComponentClass::Balcony)));
    put("other_boxes", boxes("other", &other));
    let mut text = TASK_TEMPLATE.to_string();
    for (k, v) in &map {
        text = text.replace(&format!("{{{k}}}"), v);
    }
    debug_assert_eq!(unresolved_placeholder(&text), None);
    Ok(PromptBundle { system_role: SYSTEM_ROLE.to_string(), task_text: text, placeholders: map })
}

/// First `{name}` marker left in `text`, if any. JSON braces in the examples
/// do not count.
pub fn unresolved_placeholder(text: &str) -> Option<&str> {
    text.match_indices('{').find_map(|(i, _)| {
        let rest = &text[i + 1..];
        let end = rest.find('}')?;
        let name = &rest[..end];
        let ident = !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c == '_');
        ident.then(|| &text[i..i + end + 2])
    })
}

/// Prompt for a single-wall facade (the first wall of a multi-wall one).
pub fn build_prompt(facade: &FacadeDescription, c: &LayoutConstraints) -> Result<PromptBundle, ReasonError> {
    let wall = facade.walls().first().copied().unwrap_or_else(|| facade.canvas());
    build_prompt_for_wall(facade, &wall, c)
}

/// Extracts the first JSON object carrying `installable_rectangles`, wherever
/// it sits in the reply.
pub fn parse_layout(response: &str) -> Result<Vec<BoundingBox>, ReasonError> {
    let found = response.char_indices().filter(|(_, ch)| *ch == '{').find_map(|(i, _)| {
        let mut stream = serde_json::Deserializer::from_str(&response[i..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(mut m))) => m.remove("installable_rectangles"),
            _ => None,
        }
    });
    let Some(list) = found else {
        return Err(ReasonError::MalformedResponse);
    };
    let bad = |index, reason: &str| ReasonError::SchemaViolation { index, reason: reason.to_string() };
    let Value::Array(items) = list else {
        return Err(bad(0, "value is not a list"));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let nums: Vec<f64> = match item {
                Value::Array(a) if a.len() == 4 => a.iter().filter_map(Value::as_f64).collect(),
                _ => return Err(bad(i, "expected [x1, y1, x2, y2]")),
            };
            if nums.len() != 4 {
                return Err(bad(i, "coordinates must be numbers"));
            }
            BoundingBox::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| bad(i, &e.to_string()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_attempts: usize,
    pub timeout_s: u64,
    /// Header carrying the credential, e.g. `Authorization`.
    pub auth_header: String,
    /// Environment variable holding the credential.
    pub auth_env: String,
    pub max_in_flight: usize,
    /// Use the deterministic layout when attempts run out.
    pub fallback: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://localhost:8000/v1/chat/completions".into(),
            model_name: "gpt-4".into(),
            temperature: 0.0,
            max_tokens: 1000,
            max_attempts: 6,
            timeout_s: 120,
            auth_header: "Authorization".into(),
            auth_env: "LLM_API_KEY".into(),
            max_in_flight: 4,
            fallback: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Sends one chat request and returns the assistant's text.
pub trait Transport: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

impl<T: Transport + ?Sized> Transport for &T {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(request)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(request)
    }
}

/// Plain HTTP chat-completion client.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    auth: Option<(String, String)>,
}

impl HttpTransport {
    /// The credential is read from `cfg.auth_env`; when the variable is unset
    /// no auth header is sent.
    pub fn new(cfg: &LlmConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(cfg.timeout_s)).build();
        let auth = std::env::var(&cfg.auth_env).ok().map(|token| {
            let value =
                if cfg.auth_header.eq_ignore_ascii_case("authorization") { format!("Bearer {token}") } else { token };
            (cfg.auth_header.clone(), value)
        });
        Self { agent, url: cfg.endpoint_url.clone(), auth }
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut req = self.agent.post(&self.url).set("Content-Type", "application/json");
        if let Some((k, v)) = &self.auth {
            req = req.set(k, v);
        }
        let body = serde_json::to_string(request).map_err(|e| TransportError(e.to_string()))?;
        let resp = req.send_string(&body).map_err(|e| TransportError(e.to_string()))?;
        let text = resp.into_string().map_err(|e| TransportError(e.to_string()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| TransportError(format!("response is not JSON: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| TransportError("response has no choices[0].message.content".into()))
    }
}

/// Replays a fixed list of replies in order, then reports exhaustion.
#[derive(Debug, Default)]
pub struct MockTransport {
    script: Vec<String>,
    next: Mutex<usize>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl MockTransport {
    pub fn new<S: Into<String>>(script: impl IntoIterator<Item = S>) -> Self {
        Self { script: script.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    /// Script file: a JSON array of reply strings.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str::<Vec<String>>(text)?))
    }

    /// Every request seen so far.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl Transport for MockTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        self.requests.lock().unwrap().push(request.clone());
        let mut next = self.next.lock().unwrap();
        let reply = self.script.get(*next).cloned().ok_or_else(|| TransportError("mock script exhausted".into()));
        *next += 1;
        reply
    }
}

/// Caps the number of concurrent requests through an inner transport.
pub struct Throttled<T> {
    inner: T,
    limit: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl<T: Transport> Throttled<T> {
    pub fn new(inner: T, limit: usize) -> Self {
        Self { inner, limit: limit.max(1), busy: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Transport> Transport for Throttled<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        {
            let mut busy = self.busy.lock().unwrap();
            while *busy >= self.limit {
                busy = self.freed.wait(busy).unwrap();
            }
            *busy += 1;
        }
        let out = self.inner.complete(request);
        *self.busy.lock().unwrap() -= 1;
        self.freed.notify_one();
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasoningOutcome {
    /// Validated layout, or the deterministic fallback; `None` only when the
    /// fallback is disabled and some wall got no acceptable answer.
    pub layout: Option<LayoutResult>,
    /// Requests sent, summed over walls.
    pub attempts_used: usize,
    /// `(attempt, reason)` for every rejected or failed request.
    pub failure_log: Vec<(usize, String)>,
}

fn summarize(v: &[LayoutViolation]) -> String {
    const SHOWN: usize = 5;
    let mut parts: Vec<String> = v.iter().take(SHOWN).map(ToString::to_string).collect();
    if v.len() > SHOWN {
        parts.push(format!("and {} more", v.len() - SHOWN));
    }
    parts.join("; ")
}

fn request(cfg: &LlmConfig, prompt: &PromptBundle, note: Option<&str>) -> ChatRequest {
    let mut user = prompt.task_text.clone();
    if let Some(n) = note {
        user.push_str("\n\n");
        user.push_str(n);
    }
    ChatRequest {
        model: cfg.model_name.clone(),
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
        messages: vec![
            ChatMessage { role: "system".into(), content: prompt.system_role.clone() },
            ChatMessage { role: "user".into(), content: user },
        ],
    }
}

/// Runs the build, send, parse, validate loop for one wall. Returns the
/// accepted rectangles, if any, and the number of requests sent.
fn reason_wall(
    facade: &FacadeDescription,
    wall: &BoundingBox,
    c: &LayoutConstraints,
    cfg: &LlmConfig,
    transport: &dyn Transport,
    log: &mut Vec<(usize, String)>,
    attempt_base: usize,
) -> Result<(Option<Vec<BoundingBox>>, usize), ReasonError> {
    let prompt = build_prompt_for_wall(facade, wall, c)?;
    let region = inset_walls(std::slice::from_ref(wall), facade.scale(), c);
    let obstructions = facade.obstructions();
    let mut note: Option<String> = None;
    for k in 1..=cfg.max_attempts {
        let attempt = attempt_base + k;
        let reply = match transport.complete(&request(cfg, &prompt, note.as_deref())) {
            Ok(r) => r,
            Err(e) => {
                log.push((attempt, format!("transport: {e}")));
                continue;
            }
        };
        let rects = match parse_layout(&reply) {
            Ok(r) => r,
            Err(e) => {
                log.push((attempt, e.to_string()));
                note = Some(format!(
                    "Your previous answer was rejected ({e}). Reply with only the JSON object described in the output format."
                ));
                continue;
            }
        };
        match validate_in_region(&rects, &region, &obstructions, facade.scale(), c) {
            Ok(_) => return Ok((Some(rects), k)),
            Err(v) => {
                let summary = summarize(&v);
                log.push((attempt, format!("constraint violations: {summary}")));
                note = Some(format!(
                    "Your previous answer was rejected: {summary}. Fix these problems and reply with the corrected JSON object."
                ));
            }
        }
    }
    Ok((None, cfg.max_attempts))
}

/// Asks the model for each wall in turn and assembles a validated layout.
///
/// Walls whose attempts run out take their share of the deterministic
/// layout; if every wall falls back the result is exactly
/// [`deterministic_layout`]. The combined proposal is re-validated against
/// the whole facade, so overlapping walls can never smuggle in overlaps.
pub fn reason_layout(
    facade: &FacadeDescription,
    c: &LayoutConstraints,
    cfg: &LlmConfig,
    transport: &dyn Transport,
) -> Result<ReasoningOutcome, ReasonError> {
    let cfg = LlmConfig { max_attempts: cfg.max_attempts.max(1), ..cfg.clone() };
    let walls = facade.walls();
    let mut log = Vec::new();
    let mut attempts = 0;
    let mut rects = Vec::new();
    let mut fell_back = Vec::new();
    for wall in &walls {
        let (got, used) = reason_wall(facade, wall, c, &cfg, transport, &mut log, attempts)?;
        attempts += used;
        match got {
            Some(r) => rects.extend(r),
            None => fell_back.push(*wall),
        }
    }
    let fallback = || deterministic_layout(facade, c);
    let layout = if fell_back.len() == walls.len() {
        cfg.fallback.then(fallback)
    } else if !fell_back.is_empty() && !cfg.fallback {
        None
    } else {
        if !fell_back.is_empty() {
            let own = inset_walls(&fell_back, facade.scale(), c);
            rects.extend(qualify(&partition(&own, &facade.obstructions()), facade.scale(), c).rectangles);
        }
        match validate_layout(&rects, facade, c) {
            Ok(mut res) => {
                if !fell_back.is_empty() {
                    res.provenance = Provenance::Deterministic;
                }
                Some(res)
            }
            Err(v) => {
                log.push((attempts, format!("combined walls rejected: {}", summarize(&v))));
                cfg.fallback.then(fallback)
            }
        }
    };
    Ok(ReasoningOutcome { layout, attempts_used: attempts, failure_log: log })
}
