/**
 * Browser entry point: WebSocket transport, render loop, HUD.
 *
 * Serve the built bundle through the trainer server
 * (`pantrainer serve --static frontend/dist`) or any static host pointed
 * at the same origin as the WebSocket endpoint.
 */

import { fitView, paint } from "./canvas.js";
import { LineSocket, TrainerClient } from "./client.js";
import { renderLayout } from "./scene.js";

const FLASH_MS = 180;

function wsSocket(url: string, onLine: (line: string) => void,
                  onClose: () => void): LineSocket {
  const ws = new WebSocket(url);
  const queue: string[] = [];
  ws.onopen = () => queue.splice(0).forEach((l) => ws.send(l));
  ws.onmessage = (ev) => {
    for (const line of String(ev.data).split("\n")) {
      if (line.trim()) onLine(line);
    }
  };
  ws.onclose = onClose;
  return {
    send: (line) => (ws.readyState === WebSocket.OPEN ? ws.send(line) : queue.push(line)),
    close: () => ws.close(),
  };
}

function start(): void {
  const canvas = document.getElementById("highway") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const hud = document.getElementById("hud")!;
  const banner = document.getElementById("banner")!;

  const url = `ws://${location.host || "127.0.0.1:8765"}/`;
  const flashes = new Map<number, { hit: boolean; until: number }>();
  let client: TrainerClient;

  const socket = wsSocket(
    url,
    (line) => client.onLine(line),
    () => {
      banner.textContent =
        client.state.phase === "ended"
          ? "session complete"
          : "connection lost - session incomplete; reload to retry";
      banner.className = client.state.phase === "ended" ? "ok" : "bad";
    },
  );

  client = new TrainerClient(socket, {
    name: `browser-${Math.floor(Math.random() * 10000)}`,
    clock: () => Math.round(performance.now()),
    onJudgment: (j) => {
      flashes.set(j.noteId, { hit: j.hit, until: performance.now() + FLASH_MS });
      if (j.hit) hud.classList.add("hit-pop");
      setTimeout(() => hud.classList.remove("hit-pop"), FLASH_MS);
    },
    onPhase: (phase) => {
      banner.textContent = phase === "running" ? "" : phase;
    },
  });

  document.addEventListener("keydown", (ev) => {
    if (!ev.repeat) client.keydown(ev.key);
  });

  const frame = () => {
    const { layout, phase, score } = client.state;
    if (layout && (phase === "running" || phase === "ended")) {
      const now = performance.now();
      for (const [id, f] of flashes) if (f.until < now) flashes.delete(id);
      const scene = renderLayout(
        client.state.layoutKind,
        layout,
        client.sessionTime(Math.round(now)),
        { flashes: new Map([...flashes].map(([id, f]) => [id, f.hit])) },
      );
      paint(ctx, scene, fitView(canvas.width, canvas.height));
    }
    const hits = score ? `${score.hits}/${score.total}` : "-";
    hud.textContent = `score ${hits}  offset ${client.state.offsetMs}ms  ${phase}`;
    requestAnimationFrame(frame);
  };

  client.start();
  requestAnimationFrame(frame);
}

window.addEventListener("load", start);
