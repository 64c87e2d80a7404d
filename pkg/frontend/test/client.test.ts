import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { LineSocket, TrainerClient } from "../src/client.js";
import { renderLayout } from "../src/scene.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

/**
 * Scripted server fixture: replies to client lines the way the session
 * server does, with a fixed clock offset and zero latency.  Lines the
 * client sends are recorded verbatim for transcript assertions.
 */
class ScriptedServer {
  sent: string[] = [];
  closed = false;
  client!: TrainerClient;
  readonly offset: number; // server clock minus client clock
  readonly t0: number;
  private clock: () => number;
  private blob: string[];

  constructor(kind: string, clock: () => number, offset: number, t0: number) {
    this.clock = clock;
    this.offset = offset;
    this.t0 = t0;
    this.blob = readFileSync(join(FIXTURES, `${kind.toLowerCase()}.blob`), "utf-8")
      .split("\n")
      .filter((l) => l.trim());
    const kindLine = `LAYOUT ${kind}`;
    this.respond = this.respond.bind(this);
    this.kindLine = kindLine;
  }

  private kindLine: string;

  socket(): LineSocket {
    return {
      send: (line: string) => {
        this.sent.push(line);
        this.respond(line);
      },
      close: () => {
        this.closed = true;
      },
    };
  }

  private reply(line: string): void {
    this.client.onLine(line);
  }

  private respond(line: string): void {
    const f = line.split(" ");
    if (f[0] === "HELLO") {
      this.reply("HELLO v1");
    } else if (f[0] === "PING") {
      this.reply(`PONG ${f[1]} ${this.clock() + this.offset}`);
    } else if (f[0] === "READY") {
      for (const l of [this.kindLine, ...this.blob, "ENDLAYOUT", `START ${this.t0}`]) {
        this.reply(l);
      }
    }
    // STRIKE replies (JUDGE/SCORE/END) are driven explicitly by the test
  }
}

function makeSession(kind = "StandardPath", offset = 250, t0 = 60_000) {
  let now = 1000;
  const clock = () => now;
  const server = new ScriptedServer(kind, clock, offset, t0);
  const client = new TrainerClient(server.socket(), { name: "smoke", clock });
  server.client = client;
  return { server, client, setNow: (t: number) => (now = t) };
}

describe("sync handshake", () => {
  it("completes after five pings with the median offset", () => {
    const { server, client } = makeSession();
    client.start();
    expect(client.state.phase).toBe("running");
    expect(client.state.offsetMs).toBe(250);
    expect(server.sent.filter((l) => l.startsWith("PING "))).toHaveLength(5);
    expect(server.sent).toContain("READY 250");
    expect(client.state.t0).toBe(60_000);
    expect(client.state.layout).not.toBeNull();
    expect(client.state.layoutKind).toBe("StandardPath");
  });

  it("converts wall clock to session time through the offset", () => {
    const { client, setNow } = makeSession();
    client.start();
    setNow(60_250); // server clock = 60_500 -> 500 ms past START
    expect(client.sessionTime()).toBe(750 - 250); // 60_250 + 250 - 60_000
  });
});

describe("scripted keydown transcript", () => {
  it("emits byte-exact STRIKE lines for the default key map", () => {
    const { server, client, setNow } = makeSession();
    client.start();

    const script: [number, string][] = [
      [60_250, "a"],   // dimple 0
      [60_660, "f"],   // dimple 3
      [61_050, "k"],   // dimple 5
      [61_455, ";"],   // dimple 7
      [61_500, "x"],   // unmapped: ignored
    ];
    for (const [t, key] of script) {
      setNow(t);
      client.keydown(key);
    }

    expect(server.sent).toEqual([
      "HELLO smoke",
      "PING 1000",
      "PING 1000",
      "PING 1000",
      "PING 1000",
      "PING 1000",
      "READY 250",
      "STRIKE 0 60250",
      "STRIKE 3 60660",
      "STRIKE 5 61050",
      "STRIKE 7 61455",
    ]);
  });

  it("ignores keydown outside the running phase", () => {
    const { server, client } = makeSession();
    client.start();
    server.client.onLine("SCORE 0 4");
    server.client.onLine("END");
    const before = server.sent.length;
    client.keydown("a");
    expect(server.sent.length).toBe(before);
  });
});

describe("judgments and score display", () => {
  it("records server judgments and shows the final SCORE", () => {
    const { server, client } = makeSession();
    const seen: boolean[] = [];
    const judging = new TrainerClient(server.socket(), {
      name: "smoke",
      clock: () => 1000,
      onJudgment: (j) => seen.push(j.hit),
    });
    server.client = judging;
    judging.start();

    judging.onLine("JUDGE 0 HIT -12");
    judging.onLine("JUDGE 1 MISS");
    judging.onLine("JUDGE 2 HIT 30");
    judging.onLine("SCORE 2 4");
    judging.onLine("END");

    expect(seen).toEqual([true, false, true]);
    expect(judging.state.judgments).toHaveLength(3);
    expect(judging.state.score).toEqual({ hits: 2, total: 4 });
    expect(judging.state.phase).toBe("ended");
    expect(server.closed).toBe(true);
    expect(client.state.phase).toBe("idle"); // untouched sibling
  });

  it("score shown always equals the last SCORE message", () => {
    const { server } = makeSession();
    const client = new TrainerClient(server.socket(), { name: "smoke", clock: () => 1 });
    server.client = client;
    client.start();
    client.onLine("SCORE 1 4");
    expect(client.state.score).toEqual({ hits: 1, total: 4 });
    client.onLine("SCORE 3 4");
    expect(client.state.score).toEqual({ hits: 3, total: 4 });
  });
});

describe("full smoke pass", () => {
  it("syncs, renders every kind, strikes, and scores", () => {
    for (const kind of [
      "StandardPath",
      "HighlightedDimple",
      "FourSplitPath",
      "DirectCurvedPath",
      "SemicircularTwoSplitPath",
      "Video",
    ]) {
      const { server, client, setNow } = makeSession(kind);
      client.start();
      expect(client.state.phase).toBe("running");

      // render a frame mid-approach using the synced session clock
      setNow(60_150);
      const scene = renderLayout(kind, client.state.layout!, client.sessionTime());
      expect(scene.length).toBeGreaterThan(0);

      setNow(60_260);
      client.keydown("a");
      if (kind !== "Video") {
        expect(server.sent).toContain("STRIKE 0 60260");
      }
      client.onLine("JUDGE 0 HIT 10");
      client.onLine("SCORE 1 4");
      client.onLine("END");
      expect(client.state.score).toEqual({ hits: 1, total: 4 });
      expect(client.state.phase).toBe("ended");
    }
  });
});
