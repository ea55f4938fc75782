/** DOM wiring for the two-pane feedback view. All content nodes are built
 * with createElement; essay text never goes through innerHTML. */

import { fetchHealth, makeAnalyzeFn, ServiceError } from "./api.js";
import { QUALITY_CLASSES, TYPE_COLORS } from "./legend.js";
import { tileViews } from "./render.js";
import { FeedbackSession, type HistoryEntry } from "./session.js";

const session = new FeedbackSession(makeAnalyzeFn());

const editor = document.getElementById("editor") as HTMLTextAreaElement;
const submitButton = document.getElementById("submit") as HTMLButtonElement;
const feedbackPane = document.getElementById("feedback") as HTMLDivElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const statusLine = document.getElementById("status") as HTMLDivElement;
const compareToggle = document.getElementById("compare") as HTMLInputElement;
const legendBox = document.getElementById("legend") as HTMLDivElement;

function buildLegend(): void {
  for (const [label, color] of TYPE_COLORS) {
    const chip = document.createElement("span");
    chip.className = "legend-chip";
    const swatch = document.createElement("span");
    swatch.className = "legend-swatch";
    swatch.style.backgroundColor = color;
    chip.append(swatch, document.createTextNode(label));
    legendBox.appendChild(chip);
  }
  for (const [label, cssClass] of QUALITY_CLASSES) {
    const badge = document.createElement("span");
    badge.className = `badge ${cssClass}`;
    badge.textContent = label;
    legendBox.appendChild(badge);
  }
}

function showBanner(message: string | null): void {
  banner.textContent = message ?? "";
  banner.hidden = message === null;
}

function renderEntry(entry: HistoryEntry, container: HTMLElement): void {
  container.textContent = "";
  const { views } = tileViews(entry.analysis);
  for (const view of views) {
    const node = document.createElement("span");
    node.textContent = view.text;
    node.title = view.title;
    if (view.kind === "labeled" && view.color) {
      node.className = "segment";
      node.style.backgroundColor = view.color + "22";
      node.style.borderBottom = `2px solid ${view.color}`;
    } else if (view.kind === "unclassified") {
      node.className = "segment unclassified";
    } else if (view.kind === "unknown-label") {
      node.className = "segment unknown-label";
    }
    container.appendChild(node);
    if (view.kind === "labeled" && view.typeLabel) {
      const tag = document.createElement("span");
      tag.className = "type-tag";
      tag.style.color = view.color ?? "inherit";
      tag.textContent = view.typeLabel;
      container.appendChild(tag);
    }
    if (view.badge) {
      const badge = document.createElement("span");
      badge.className = `badge ${view.badge.cssClass}`;
      badge.textContent = view.badge.text;
      container.appendChild(badge);
    }
  }
  if (entry.analysis.error) {
    const note = document.createElement("div");
    note.className = "analysis-error";
    note.textContent = entry.analysis.error;
    container.appendChild(note);
  }
}

function renderFeedback(): void {
  feedbackPane.textContent = "";
  const showPrevious = compareToggle.checked && session.previous !== null;
  const entries: [string, HistoryEntry][] = [];
  if (showPrevious) entries.push(["previous draft", session.previous!]);
  if (session.current) entries.push([showPrevious ? "current draft" : "", session.current]);
  if (!entries.length) {
    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "Write or paste your essay on the left, then ask for feedback.";
    feedbackPane.appendChild(hint);
    return;
  }
  for (const [caption, entry] of entries) {
    if (caption) {
      const heading = document.createElement("h3");
      heading.textContent = caption;
      feedbackPane.appendChild(heading);
    }
    const box = document.createElement("div");
    box.className = "analysis";
    renderEntry(entry, box);
    feedbackPane.appendChild(box);
  }
  const discarded = session.current?.analysis.spans_discarded ?? 0;
  if (discarded > 0) {
    const note = document.createElement("p");
    note.className = "hint";
    note.textContent = `${discarded} segment(s) could not be classified and are shown unhighlighted.`;
    feedbackPane.appendChild(note);
  }
}

function refreshControls(): void {
  submitButton.disabled = session.busy || !editor.value.trim();
  submitButton.textContent = session.busy ? "analyzing…" : "get feedback";
  compareToggle.disabled = session.history.length < 2;
}

async function submitDraft(): Promise<void> {
  showBanner(null);
  refreshControls();
  try {
    const applied = await session.submit(editor.value);
    if (applied !== null) renderFeedback();
  } catch (err) {
    if ((err as Error).name !== "AbortError") {
      showBanner(err instanceof ServiceError ? err.message : `analysis failed: ${err}`);
    }
  } finally {
    refreshControls();
  }
}

async function initStatus(): Promise<void> {
  try {
    const health = await fetchHealth();
    statusLine.textContent =
      health.status === "ok"
        ? `model ${health.model} ready`
        : `service degraded: inference server unreachable`;
  } catch {
    statusLine.textContent = "feedback service unreachable";
  }
}

buildLegend();
refreshControls();
void initStatus();
editor.addEventListener("input", refreshControls);
submitButton.addEventListener("click", () => void submitDraft());
compareToggle.addEventListener("change", renderFeedback);
