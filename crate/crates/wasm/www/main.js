import init, { Demo, preprocess_view } from "./pkg/sarcalab_wasm.js";

const $ = (id) => document.getElementById(id);
const fail = (e) => { $("error").textContent = String(e); };
const escape = (s) => s.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" })[c]);

function showStages() {
  const v = JSON.parse(preprocess_view($("text").value));
  const list = (xs) => xs.map((t) => `<code>${escape(t)}</code>`).join(" ") || "<em>none</em>";
  $("stages").innerHTML = `
    <p>tokens: ${list(v.tokens)}</p>
    <p>stopwords removed: ${list(v.stopwords_removed)}</p>
    <p>model input: ${list(v.final)}</p>`;
}

function showExplanation(demo) {
  $("error").textContent = "";
  let e;
  try {
    e = JSON.parse(demo.explain($("algo").value, $("text").value, Number($("samples").value), BigInt($("seed").value)));
  } catch (err) {
    $("explanation").innerHTML = "";
    $("weights").innerHTML = "";
    return fail(err);
  }
  $("explanation").innerHTML =
    `<p>predicted <b>${e.predicted_class === 1 ? "sarcastic" : "not sarcastic"}</b>, ` +
    `P(sarcastic) = ${e.probs[1].toFixed(3)}, surrogate R² = ${e.r2.toFixed(3)}</p>` + e.html;
  const rows = e.tokens
    .map((t, i) => [t, e.weights[i]])
    .filter(([, w]) => w !== 0)
    .sort((a, b) => Math.abs(b[1]) - Math.abs(a[1]))
    .map(([t, w]) => `<tr><td>${escape(t)}</td><td>${w >= 0 ? "+" : ""}${w.toFixed(4)}</td></tr>`);
  $("weights").innerHTML = `<tr><th>token</th><th>weight</th></tr>${rows.join("")}`;
}

function showCurves(demo) {
  const chosen = [...document.querySelectorAll("#picks input:checked")].map((c) => c.value).join(",");
  if (!chosen) {
    $("roc").innerHTML = $("pr").innerHTML = "";
    return;
  }
  $("roc").innerHTML = demo.curves_svg("roc", chosen);
  $("pr").innerHTML = demo.curves_svg("pr", chosen);
}

let demo = null;

function train() {
  const t0 = performance.now();
  demo?.free();
  demo = new Demo(400, 0n, Number($("noise").value));
  const summary = JSON.parse(demo.summary());
  $("status").textContent =
    `Trained ${summary.models.length} models in ${((performance.now() - t0) / 1000).toFixed(1)} s; ` +
    `${summary.n_test} held-out comments.`;
  $("summary").innerHTML = "<tr><th>model</th><th>accuracy</th><th>macro F1</th><th>ROC AUC</th><th>PR area</th></tr>" +
    summary.models.map((m) => `<tr><td>${m.algorithm}</td><td>${m.accuracy.toFixed(3)}</td>` +
      `<td>${m.macro_f1.toFixed(3)}</td><td>${m.auc.toFixed(3)}</td><td>${m.pr_area.toFixed(3)}</td></tr>`).join("");
  $("examples").length = 1;
  for (const ex of JSON.parse(demo.examples(12))) {
    $("examples").add(new Option(`[${ex.label}] ${ex.text}`, ex.text));
  }
  return summary;
}

async function main() {
  await init();
  showStages();
  $("text").addEventListener("input", showStages);
  // Let the status line paint before the training blocks the thread.
  await new Promise((r) => setTimeout(r, 20));
  const summary = train();
  for (const m of summary.models) {
    $("algo").add(new Option(m.algorithm, m.algorithm));
    $("picks").insertAdjacentHTML("beforeend",
      `<label><input type="checkbox" value="${m.algorithm}" checked> ${m.algorithm}</label>`);
  }

  $("retrain").addEventListener("click", () => {
    try {
      $("error").textContent = "";
      train();
      showCurves(demo);
      showExplanation(demo);
    } catch (e) {
      fail(e);
    }
  });
  $("examples").addEventListener("change", () => {
    if (!$("examples").value) return;
    $("text").value = $("examples").value;
    showStages();
    showExplanation(demo);
  });
  $("explain").addEventListener("click", () => showExplanation(demo));
  $("picks").addEventListener("change", () => showCurves(demo));
  showCurves(demo);
  showExplanation(demo);
}

main().catch(fail);
