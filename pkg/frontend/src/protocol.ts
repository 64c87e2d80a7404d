/**
 * Line protocol shared with the session server, client side.
 *
 * Every message is one line. The client estimates its clock offset from
 * PING/PONG round trips (NTP midpoint) and reports the median with READY;
 * the server converts strike timestamps and stays authoritative.
 */

export type ServerLine =
  | { kind: "hello"; version: number }
  | { kind: "layout"; layoutKind: string }
  | { kind: "endlayout" }
  | { kind: "start"; t0: number }
  | { kind: "judge"; noteId: number; hit: boolean; deltaMs: number | null }
  | { kind: "score"; hits: number; total: number }
  | { kind: "end" }
  | { kind: "pong"; tClient: number; tServer: number };

export class ProtocolError extends Error {}

function int(field: string, line: string): number {
  if (!/^-?\d+$/.test(field)) {
    throw new ProtocolError(`bad integer in ${JSON.stringify(line)}`);
  }
  return parseInt(field, 10);
}

export function parseServerLine(line: string): ServerLine {
  const f = line.split(" ");
  switch (f[0]) {
    case "HELLO":
      if (f.length === 2 && f[1].startsWith("v")) {
        return { kind: "hello", version: int(f[1].slice(1), line) };
      }
      break;
    case "LAYOUT":
      if (f.length === 2) return { kind: "layout", layoutKind: f[1] };
      break;
    case "ENDLAYOUT":
      if (f.length === 1) return { kind: "endlayout" };
      break;
    case "START":
      if (f.length === 2) return { kind: "start", t0: int(f[1], line) };
      break;
    case "JUDGE":
      if (f.length === 4 && f[2] === "HIT") {
        return { kind: "judge", noteId: int(f[1], line), hit: true, deltaMs: int(f[3], line) };
      }
      if (f.length === 3 && f[2] === "MISS") {
        return { kind: "judge", noteId: int(f[1], line), hit: false, deltaMs: null };
      }
      break;
    case "SCORE":
      if (f.length === 3) {
        return { kind: "score", hits: int(f[1], line), total: int(f[2], line) };
      }
      break;
    case "END":
      if (f.length === 1) return { kind: "end" };
      break;
    case "PONG":
      if (f.length === 3) {
        return { kind: "pong", tClient: int(f[1], line), tServer: int(f[2], line) };
      }
      break;
  }
  throw new ProtocolError(`bad server line ${JSON.stringify(line)}`);
}

export const hello = (name: string) => `HELLO ${name}`;
export const ping = (tClient: number) => `PING ${tClient}`;
export const ready = (offsetMs: number) => (offsetMs ? `READY ${offsetMs}` : "READY");
export const strike = (dimple: number, tClient: number) => `STRIKE ${dimple} ${tClient}`;

/** NTP midpoint estimate: exact under symmetric latency. */
export function estimateOffset(tSend: number, tServer: number, tRecv: number) {
  if (tRecv < tSend) throw new ProtocolError("client clock ran backwards");
  return { offsetMs: tServer - (tSend + tRecv) / 2, rttMs: tRecv - tSend };
}

export function median(values: number[]): number {
  if (values.length === 0) throw new ProtocolError("median of nothing");
  const sorted = [...values].sort((a, b) => a - b);
  const mid = Math.floor(sorted.length / 2);
  return sorted.length % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
}
