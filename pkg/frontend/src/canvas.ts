/** Paint a scene description onto a 2D canvas. */

import { Primitive } from "./scene.js";

export interface ViewFit {
  scale: number; // pixels per projected world unit
  ox: number;
  oy: number;
}

export function fitView(width: number, height: number): ViewFit {
  // projected world roughly spans x in [-0.7, 0.9], y in [-1.3, 0.5]
  const scale = Math.min(width / 1.8, height / 2.0);
  return { scale, ox: width * 0.45, oy: height * 0.72 };
}

export function paint(
  ctx: CanvasRenderingContext2D,
  scene: Primitive[],
  fit: ViewFit,
): void {
  const { scale, ox, oy } = fit;
  const X = (x: number) => ox + x * scale;
  const Y = (y: number) => oy + y * scale;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.fillStyle = "#14141a";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);

  for (const prim of scene) {
    switch (prim.type) {
      case "panel": {
        ctx.fillStyle = "#26262e";
        ctx.fillRect(ctx.canvas.width * 0.15, ctx.canvas.height * 0.1,
          ctx.canvas.width * 0.7, ctx.canvas.height * 0.4);
        ctx.fillStyle = "#aaaaaa";
        ctx.font = "16px monospace";
        ctx.textAlign = "center";
        ctx.fillText(`video: ${prim.text}`, ctx.canvas.width / 2,
          ctx.canvas.height * 0.3);
        break;
      }
      case "circle":
        ctx.beginPath();
        ctx.arc(X(prim.x), Y(prim.y), prim.r * scale, 0, Math.PI * 2);
        if (prim.fill) {
          ctx.fillStyle = prim.color;
          ctx.fill();
        } else {
          ctx.strokeStyle = prim.color;
          ctx.lineWidth = 2;
          ctx.stroke();
        }
        break;
      case "polyline": {
        ctx.beginPath();
        prim.points.forEach(([x, y], i) =>
          i === 0 ? ctx.moveTo(X(x), Y(y)) : ctx.lineTo(X(x), Y(y)));
        ctx.strokeStyle = prim.color;
        ctx.globalAlpha = 0.45;
        ctx.lineWidth = Math.max(1, prim.width * scale);
        ctx.stroke();
        ctx.globalAlpha = 1.0;
        break;
      }
      case "sprite":
        ctx.beginPath();
        ctx.arc(X(prim.x), Y(prim.y), Math.max(3, prim.r * scale), 0, Math.PI * 2);
        ctx.fillStyle = prim.color;
        ctx.fill();
        break;
      case "ring":
        ctx.strokeStyle = prim.color;
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.arc(X(prim.x), Y(prim.y), prim.rOuter * scale, 0, Math.PI * 2);
        ctx.stroke();
        ctx.beginPath();
        ctx.arc(X(prim.x), Y(prim.y), Math.max(0.5, prim.rInner * scale), 0, Math.PI * 2);
        ctx.stroke();
        break;
    }
  }
}
