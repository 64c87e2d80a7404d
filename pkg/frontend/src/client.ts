/**
 * Session client state machine, transport-agnostic.
 *
 * Feed server lines to onLine(); outgoing lines go through the injected
 * socket. The client computes nothing about hits itself: every judgment
 * and the score shown come from server JUDGE/SCORE messages.
 */

import { DEFAULT_KEY_MAP, dimpleForKey } from "./input.js";
import { Layout, parseLayoutBlob } from "./layout.js";
import {
  ProtocolError,
  ServerLine,
  estimateOffset,
  hello,
  median,
  parseServerLine,
  ping,
  ready,
  strike,
} from "./protocol.js";

export interface LineSocket {
  send(line: string): void;
  close(): void;
}

export type Phase = "idle" | "syncing" | "waiting" | "running" | "ended";

export interface Judgment {
  noteId: number;
  hit: boolean;
  deltaMs: number | null;
}

export interface ViewState {
  phase: Phase;
  offsetMs: number;
  rttMs: number;
  t0: number;
  layoutKind: string;
  layout: Layout | null;
  judgments: Judgment[];
  /** score as reported by the last SCORE message, never computed locally */
  score: { hits: number; total: number } | null;
  keyMap: Record<string, number>;
}

export interface ClientOptions {
  name: string;
  clock: () => number;
  pings?: number; // sync round trips, at least 5
  keyMap?: Record<string, number>;
  onJudgment?: (j: Judgment) => void;
  onPhase?: (phase: Phase) => void;
}

export class TrainerClient {
  readonly state: ViewState;
  private readonly socket: LineSocket;
  private readonly clock: () => number;
  private readonly name: string;
  private readonly pingsWanted: number;
  private readonly onJudgment?: (j: Judgment) => void;
  private readonly onPhase?: (phase: Phase) => void;
  private pendingPing: number | null = null;
  private offsetSamples: number[] = [];
  private blobLines: string[] = [];
  private collectingBlob = false;

  constructor(socket: LineSocket, options: ClientOptions) {
    this.socket = socket;
    this.clock = options.clock;
    this.name = options.name;
    this.pingsWanted = Math.max(5, options.pings ?? 5);
    this.onJudgment = options.onJudgment;
    this.onPhase = options.onPhase;
    this.state = {
      phase: "idle",
      offsetMs: 0,
      rttMs: 0,
      t0: 0,
      layoutKind: "",
      layout: null,
      judgments: [],
      score: null,
      keyMap: options.keyMap ?? DEFAULT_KEY_MAP,
    };
  }

  /** Open the protocol: HELLO, then the ping burst. */
  start(): void {
    // state changes precede sends: replies may arrive reentrantly
    this.setPhase("syncing");
    this.socket.send(hello(this.name));
  }

  private setPhase(phase: Phase): void {
    this.state.phase = phase;
    this.onPhase?.(phase);
  }

  private sendPing(): void {
    this.pendingPing = this.clock();
    this.socket.send(ping(this.pendingPing));
  }

  /** Session time (ms since START) for the current wall clock. */
  sessionTime(now = this.clock()): number {
    return now + this.state.offsetMs - this.state.t0;
  }

  keydown(key: string): void {
    if (this.state.phase !== "running") return;
    const dimple = dimpleForKey(key, this.state.keyMap);
    if (dimple === null) return;
    this.socket.send(strike(dimple, this.clock()));
  }

  onLine(line: string): void {
    if (this.collectingBlob && line !== "ENDLAYOUT") {
      this.blobLines.push(line);
      return;
    }
    this.apply(parseServerLine(line));
  }

  private apply(msg: ServerLine): void {
    switch (msg.kind) {
      case "hello":
        this.sendPing();
        return;
      case "pong": {
        if (this.pendingPing === null || msg.tClient !== this.pendingPing) {
          throw new ProtocolError("unmatched PONG");
        }
        const sync = estimateOffset(msg.tClient, msg.tServer, this.clock());
        this.offsetSamples.push(sync.offsetMs);
        this.state.rttMs = sync.rttMs;
        this.pendingPing = null;
        if (this.offsetSamples.length < this.pingsWanted) {
          this.sendPing();
        } else {
          this.state.offsetMs = Math.round(median(this.offsetSamples));
          this.setPhase("waiting");
          this.socket.send(ready(this.state.offsetMs));
        }
        return;
      }
      case "layout":
        this.state.layoutKind = msg.layoutKind;
        this.collectingBlob = true;
        this.blobLines = [];
        return;
      case "endlayout":
        this.collectingBlob = false;
        this.state.layout = parseLayoutBlob(this.state.layoutKind, this.blobLines);
        return;
      case "start":
        this.state.t0 = msg.t0;
        this.setPhase("running");
        return;
      case "judge": {
        const judgment = { noteId: msg.noteId, hit: msg.hit, deltaMs: msg.deltaMs };
        this.state.judgments.push(judgment);
        this.onJudgment?.(judgment);
        return;
      }
      case "score":
        this.state.score = { hits: msg.hits, total: msg.total };
        return;
      case "end":
        this.setPhase("ended");
        this.socket.close();
        return;
    }
  }
}
