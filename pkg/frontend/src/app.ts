/** Browser wiring: canvas rendering, input handling, dashboard refresh.
 *
 * All persistent state lives behind the service API; this layer keeps
 * only the current session and view transform. Keyboard: n/p cycle the
 * active keypoint, u undoes the last point, Enter submits when all 19
 * are placed.
 */

import { ServiceClient } from "./api.js";
import { dashboardOverall, dashboardRows } from "./format.js";
import { KEYPOINTS, SKELETON_EDGES, keypointName, keypointSide } from "./schema.js";
import {
  isComplete,
  placePoint,
  reopenKeypoints,
  selectKeypoint,
  selectNext,
  selectPrevious,
  startSession,
  toAnnotationRows,
  undoLast,
  type SessionState,
} from "./session.js";
import {
  clampToFrame,
  fitToViewport,
  imageToScreen,
  pan,
  screenToImage,
  zoomAt,
  type ViewTransform,
} from "./transform.js";

const SIDE_COLORS = { left: "#ff9f43", right: "#54d06c", mid: "#e8e8f0" } as const;

const client = new ServiceClient("");
const annotatorId = new URLSearchParams(location.search).get("annotator") ?? "anonymous";

let session: SessionState = startSession(null);
let view: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
let image: HTMLImageElement | null = null;
let dragging: { x: number; y: number } | null = null;

const canvas = document.getElementById("frame") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const keypointList = document.getElementById("keypoints")!;
const statusLine = document.getElementById("status")!;
const submitButton = document.getElementById("submit") as HTMLButtonElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const dashboardBody = document.getElementById("dashboard-body")!;
const dashboardNote = document.getElementById("dashboard-note")!;

function setStatus(text: string) {
  statusLine.textContent = text;
}

function resizeCanvas() {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  if (session.task) {
    view = fitToViewport(session.task.width, session.task.height, canvas.width, canvas.height);
  }
  render();
}

function render() {
  ctx.fillStyle = "#101018";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const task = session.task;
  if (!task) return;

  const topLeft = imageToScreen(view, { x: 0, y: 0 });
  const size = { w: task.width * view.scale, h: task.height * view.scale };
  if (image) {
    ctx.drawImage(image, topLeft.x, topLeft.y, size.w, size.h);
  } else {
    ctx.fillStyle = "#1c1c2a";
    ctx.fillRect(topLeft.x, topLeft.y, size.w, size.h);
  }
  ctx.strokeStyle = "#3a3a55";
  ctx.strokeRect(topLeft.x, topLeft.y, size.w, size.h);

  // skeleton overlay between anatomically adjacent placed keypoints
  ctx.lineWidth = 2;
  ctx.strokeStyle = "rgba(160, 170, 255, 0.8)";
  for (const [a, b] of SKELETON_EDGES) {
    const pa = session.placed.get(a);
    const pb = session.placed.get(b);
    if (!pa || !pb) continue;
    const sa = imageToScreen(view, pa);
    const sb = imageToScreen(view, pb);
    ctx.beginPath();
    ctx.moveTo(sa.x, sa.y);
    ctx.lineTo(sb.x, sb.y);
    ctx.stroke();
  }

  for (const def of KEYPOINTS) {
    const p = session.placed.get(def.ordinal);
    if (!p) continue;
    const s = imageToScreen(view, p);
    ctx.fillStyle = SIDE_COLORS[keypointSide(def.name)];
    ctx.beginPath();
    ctx.arc(s.x, s.y, def.ordinal === session.cursor ? 6 : 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#ffffff";
    ctx.font = "11px sans-serif";
    ctx.fillText(String(def.ordinal), s.x + 7, s.y - 7);
  }
  renderSidebar();
}

function renderSidebar() {
  keypointList.innerHTML = "";
  for (const def of KEYPOINTS) {
    const item = document.createElement("li");
    const placed = session.placed.has(def.ordinal);
    item.textContent = `${def.ordinal}. ${def.name}${placed ? " ✓" : ""}`;
    item.className = def.ordinal === session.cursor ? "active" : placed ? "done" : "";
    item.onclick = () => {
      session = selectKeypoint(session, def.ordinal);
      render();
    };
    keypointList.appendChild(item);
  }
  submitButton.disabled = !isComplete(session);
  const task = session.task;
  if (task) {
    setStatus(
      `${task.frame_id}${task.interrater ? " (inter-rater)" : ""} — ` +
        `${session.placed.size}/19 placed, next: ${keypointName(session.cursor)}`,
    );
  }
}

async function loadNextTask() {
  const task = await client.nextTask(annotatorId);
  session = startSession(task);
  image = null;
  if (!task) {
    setStatus("all frames annotated — thank you");
    render();
    return;
  }
  view = fitToViewport(task.width, task.height, canvas.width, canvas.height);
  const img = new Image();
  img.onload = () => {
    image = img;
    render();
  };
  img.onerror = () => render(); // placeholder rectangle stays
  img.src = client.imageUrl(task);
  render();
}

async function submit() {
  if (!session.task || !isComplete(session)) return;
  submitButton.disabled = true;
  const result = await client.submit(toAnnotationRows(session));
  if (result.ok) {
    await loadNextTask();
    return;
  }
  // rejected: re-open the offending keypoints and let the annotator fix them
  const names = result.violations
    .map((v) => v.keypoint)
    .filter((name): name is string => name !== null);
  session = reopenKeypoints(session, names);
  setStatus(`rejected: ${result.error}`);
  render();
}

async function refreshDashboard() {
  try {
    const snapshot = await client.agreement();
    if (!snapshot) {
      dashboardNote.textContent = "no complete inter-rater frames yet";
      dashboardBody.innerHTML = "";
      return;
    }
    dashboardNote.textContent =
      `${snapshot.complete_frames} complete / ${snapshot.partial_frames} partial ` +
      `inter-rater frames, ${snapshot.n_raters} raters`;
    dashboardBody.innerHTML = "";
    for (const row of [...dashboardRows(snapshot), dashboardOverall(snapshot)]) {
      const tr = document.createElement("tr");
      tr.innerHTML = `<td>${row.keypoint}</td><td>${row.hMm}</td><td>${row.h95Mm}</td>`;
      dashboardBody.appendChild(tr);
    }
  } catch (error) {
    dashboardNote.textContent = `agreement unavailable: ${error}`;
  }
}

canvas.addEventListener("mousedown", (event) => {
  if (event.button === 1 || event.button === 2 || event.shiftKey) {
    dragging = { x: event.offsetX, y: event.offsetY };
    event.preventDefault();
  }
});

canvas.addEventListener("mousemove", (event) => {
  if (dragging) {
    view = pan(view, event.offsetX - dragging.x, event.offsetY - dragging.y);
    dragging = { x: event.offsetX, y: event.offsetY };
    render();
  }
});

canvas.addEventListener("mouseup", (event) => {
  if (dragging) {
    dragging = null;
    return;
  }
  if (event.button !== 0 || !session.task) return;
  const imagePoint = clampToFrame(
    screenToImage(view, { x: event.offsetX, y: event.offsetY }),
    session.task.width,
    session.task.height,
  );
  session = placePoint(session, imagePoint);
  render();
});

canvas.addEventListener("contextmenu", (event) => event.preventDefault());

canvas.addEventListener("wheel", (event) => {
  event.preventDefault();
  const factor = event.deltaY < 0 ? 1.15 : 1 / 1.15;
  view = zoomAt(view, { x: event.offsetX, y: event.offsetY }, factor);
  render();
});

document.addEventListener("keydown", (event) => {
  if (event.key === "n") session = selectNext(session);
  else if (event.key === "p") session = selectPrevious(session);
  else if (event.key === "u") session = undoLast(session);
  else if (event.key === "Enter") void submit();
  else return;
  render();
});

undoButton.onclick = () => {
  session = undoLast(session);
  render();
};
submitButton.onclick = () => void submit();
window.addEventListener("resize", resizeCanvas);

resizeCanvas();
void loadNextTask();
void refreshDashboard();
setInterval(() => void refreshDashboard(), 5000);
