import init, { Demo } from "./pkg/prunechain_web.js";

await init();
const demo = new Demo();
const $ = (id) => document.getElementById(id);

function log(text, isError = false) {
  const line = document.createElement("div");
  line.textContent = text;
  if (isError) line.className = "error";
  $("log").prepend(line);
}

function describe(outcome) {
  switch (outcome.produced) {
    case "normal": {
      let s = `block ${outcome.block}`;
      for (const d of outcome.decisions) {
        const verdict = d.verdict.verdict === "approved" ? "approved" : `no effect (${d.verdict.reason})`;
        s += `; request ${d.request.block_number}.${d.request.entry_number}: ${verdict}`;
      }
      return s;
    }
    case "empty":
      return `block ${outcome.block}, empty`;
    case "summary": {
      let s = `summary block ${outcome.block}`;
      if (outcome.prune) s += `; marker ${outcome.prune.old_marker} -> ${outcome.prune.new_marker}`;
      if (outcome.guard_blocked) s += "; prune blocked by a guard";
      return s;
    }
    default:
      return "idle";
  }
}

function draw() {
  const pre = $("chain");
  pre.replaceChildren();
  for (const line of demo.render().trimEnd().split("\n")) {
    const div = document.createElement("div");
    div.textContent = line;
    if (line.startsWith("S")) div.className = "summary";
    if (line.startsWith("E")) div.className = "empty";
    pre.append(div);
  }
  $("status").innerHTML = "";
  for (const [k, v] of [
    ["marker", demo.marker()],
    ["length", demo.length()],
    ["waiting", demo.waiting()],
    ["verified", demo.valid() ? "yes" : "NO"],
  ]) {
    const span = document.createElement("span");
    span.textContent = `${k}: ${v}`;
    $("status").append(span);
  }
}

function attempt(action) {
  try {
    log(action());
  } catch (e) {
    log(String(e.message ?? e), true);
  }
  draw();
}

for (const button of document.querySelectorAll("[data-login]")) {
  button.addEventListener("click", () => attempt(() => "queued " + demo.login(button.dataset.login)));
}
$("delete").addEventListener("click", () =>
  attempt(() => "queued " + demo.request_deletion($("requester").value, $("target").value.trim())),
);
const tick = () => describe(JSON.parse(demo.tick()));
$("tick").addEventListener("click", () => attempt(tick));
$("tick3").addEventListener("click", () => attempt(() => [tick(), tick(), tick()].join("\n")));

draw();
