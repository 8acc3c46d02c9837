/** Integration tests against the reference world server (spawned as a child
 * process). These cover the SDK halves of the request-count and sync
 * guarantees: one wire request per batched call, and writes visible to a
 * following read. */

import { spawn, type ChildProcess } from "node:child_process";
import * as net from "node:net";
import * as readline from "node:readline";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { RequestFailed, Session } from "../src/session.js";
import type { ModelState, TopicMessage } from "../src/types.js";
import { identityPose, zeroTwist } from "../src/types.js";

const BOX_XML =
  '<model name="box"><link name="body"><visual name="shell"><geometry>' +
  '<box size="1 1 1"/></geometry></visual></link></model>';

let server: ChildProcess;
let port: number;

function state(name: string, x: number, y = 0, z = 0): ModelState {
  return {
    name,
    pose: { position: { x, y, z }, orientation: { x: 0, y: 0, z: 0, w: 1 } },
    twist: zeroTwist(),
    reference_frame: "world",
  };
}

async function connect(): Promise<Session> {
  return Session.connect({ port });
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "simsync.server", "--port", "0"], {
    cwd: new URL("../..", import.meta.url).pathname,
    stdio: ["ignore", "pipe", "inherit"],
  });
  const rl = readline.createInterface({ input: server.stdout! });
  const first: string = await new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 15000);
    rl.once("line", (line) => {
      clearTimeout(timer);
      resolve(line);
    });
  });
  const match = /listening on [\d.]+:(\d+)/.exec(first);
  if (!match) throw new Error(`unexpected server banner: ${first}`);
  port = Number(match[1]);
}, 20000);

afterAll(() => {
  server?.kill();
});

describe("session basics", () => {
  it("rejects with address context when the port is closed", async () => {
    await expect(Session.connect({ port: 1, connectTimeoutMs: 2000 })).rejects.toThrow("127.0.0.1:1");
  });

  it("spawn, get, set, delete round trip", async () => {
    const session = await connect();
    try {
      await session.spawnModel("ts1", BOX_XML, {
        position: { x: 1, y: 2, z: 3 },
        orientation: { x: 0, y: 0, z: 0, w: 1 },
      });
      const got = await session.getModelState("ts1");
      expect(got.pose.position).toEqual({ x: 1, y: 2, z: 3 });
      expect(await session.setModelState(state("ts1", 9))).toBe("OK");
      expect((await session.getModelState("ts1")).pose.position.x).toBe(9);
      await session.deleteModel("ts1");
      await expect(session.getModelState("ts1")).rejects.toThrow(RequestFailed);
    } finally {
      session.close();
    }
  });

  it("per-call timeout rejects", async () => {
    const silent = net.createServer(() => undefined);
    await new Promise<void>((resolve) => silent.listen(0, "127.0.0.1", resolve));
    const silentPort = (silent.address() as net.AddressInfo).port;
    const session = await Session.connect({ port: silentPort, timeoutMs: 300 });
    await expect(session.advanceClock(0)).rejects.toThrow("no response");
    session.close();
    silent.close();
  });
});

describe("batched calls (request-count client half)", () => {
  it("one wire request per batched call regardless of batch size", async () => {
    const session = await connect();
    try {
      for (let i = 0; i < 8; i++) {
        await session.spawnModel(`batch${i}`, BOX_XML, identityPose());
      }
      const names = Array.from({ length: 8 }, (_, i) => `batch${i}`);
      const before = session.requestCounts.get("get_model_states") ?? 0;
      const results = await session.getModelStates(names);
      expect(results).toHaveLength(8);
      expect(session.requestCounts.get("get_model_states")).toBe(before + 1);

      const states = names.map((name, i) => state(name, i + 0.5));
      const setBefore = session.requestCounts.get("set_model_states") ?? 0;
      const statuses = await session.setModelStates(states);
      expect(statuses).toEqual(Array(8).fill("OK"));
      expect(session.requestCounts.get("set_model_states")).toBe(setBefore + 1);

      // ids advance once per request: 20 batched syncs = 40 requests exactly
      const idBefore = (session as any).nextId;
      for (let i = 0; i < 20; i++) {
        await session.getModelStates(names);
        await session.setModelStates(states);
      }
      expect((session as any).nextId - idBefore).toBe(40);
      for (const name of names) {
        await session.deleteModel(name);
      }
    } finally {
      session.close();
    }
  }, 30000);

  it("empty batch still issues exactly one request", async () => {
    const session = await connect();
    try {
      const before = (session as any).nextId;
      expect(await session.getModelStates([])).toEqual([]);
      expect((session as any).nextId - before).toBe(1);
    } finally {
      session.close();
    }
  });

  it("unknown names come back as null markers in position", async () => {
    const session = await connect();
    try {
      await session.spawnModel("known", BOX_XML, identityPose());
      const results = await session.getModelStates(["ghost", "known", "ghost2"]);
      expect(results[0]).toBeNull();
      expect(results[1]?.name).toBe("known");
      expect(results[2]).toBeNull();
      const statuses = await session.setModelStates([state("known", 1), state("ghost", 2)]);
      expect(statuses).toEqual(["OK", "NOT_FOUND"]);
      await session.deleteModel("known");
    } finally {
      session.close();
    }
  });
});

describe("read-your-writes (sync client half)", () => {
  it("a batched set is visible to the next batched get, exactly", async () => {
    const session = await connect();
    try {
      await session.spawnModel("rw1", BOX_XML, identityPose());
      await session.spawnModel("rw2", BOX_XML, identityPose());
      const wrote = [state("rw1", 2.5, -1.25, 0.75), state("rw2", -3.125, 0.5, 9)];
      expect(await session.setModelStates(wrote)).toEqual(["OK", "OK"]);
      const read = await session.getModelStates(["rw1", "rw2"]);
      expect(read[0]?.pose.position).toEqual({ x: 2.5, y: -1.25, z: 0.75 });
      expect(read[1]?.pose.position).toEqual({ x: -3.125, y: 0.5, z: 9 });
      await session.deleteModel("rw1");
      await session.deleteModel("rw2");
    } finally {
      session.close();
    }
  });

  it("link and visual and light batched ops work end to end", async () => {
    const session = await connect();
    try {
      await session.spawnModel("lv", BOX_XML, identityPose());
      const [link] = await session.getLinkStates([{ model_name: "lv", link_name: "body" }]);
      expect(link).not.toBeNull();
      expect(
        await session.setLinkStates([
          { ...link!, pose: { ...link!.pose, position: { x: 4, y: 4, z: 4 } } },
        ]),
      ).toEqual(["OK"]);
      const [visual] = await session.getVisualStates([
        { model_name: "lv", link_name: "body", visual_name: "shell" },
      ]);
      expect(visual?.visible).toBe(true);
      expect(await session.setVisualStates([{ ...visual!, visible: false }])).toEqual(["OK"]);
      const [reread] = await session.getVisualStates([
        { model_name: "lv", link_name: "body", visual_name: "shell" },
      ]);
      expect(reread?.visible).toBe(false);
      expect(await session.getLightStates(["nope"])).toEqual([null]);
      await session.deleteModel("lv");
    } finally {
      session.close();
    }
  });

  it("invalid quaternion comes back INVALID per entry", async () => {
    const session = await connect();
    try {
      await session.spawnModel("inv", BOX_XML, identityPose());
      const bad = state("inv", 0);
      bad.pose.orientation = { x: 0, y: 0, z: 0, w: 2 };
      expect(await session.setModelStates([bad, state("inv", 1)])).toEqual(["INVALID", "OK"]);
      await session.deleteModel("inv");
    } finally {
      session.close();
    }
  });
});

describe("topics", () => {
  it("subscribe + advance delivers one clock message per tick", async () => {
    const session = await connect();
    try {
      const received: number[] = [];
      session.onTopic("clock", (msg: TopicMessage) => {
        received.push(msg.body.sim_time_ns as number);
      });
      await session.subscribe("clock");
      const target = await session.advanceClock(10);
      const deadline = Date.now() + 3000;
      while (received.length < 10 && Date.now() < deadline) {
        await new Promise((resolve) => setTimeout(resolve, 20));
      }
      expect(received).toHaveLength(10);
      expect(received[received.length - 1]).toBe(target);
      for (let i = 1; i < received.length; i++) {
        expect(received[i] - received[i - 1]).toBe(1_000_000);
      }

      // unsubscribe by replacing the topic set
      await session.subscribe();
      await session.advanceClock(5);
      await new Promise((resolve) => setTimeout(resolve, 200));
      expect(received).toHaveLength(10);
    } finally {
      session.close();
    }
  }, 15000);

  it("local handler removal stops dispatch", async () => {
    const session = await connect();
    try {
      let count = 0;
      const off = session.onTopic("clock", () => {
        count += 1;
      });
      await session.subscribe("clock");
      await session.advanceClock(3);
      await new Promise((resolve) => setTimeout(resolve, 200));
      off();
      await session.advanceClock(3);
      await new Promise((resolve) => setTimeout(resolve, 200));
      expect(count).toBe(3);
    } finally {
      session.close();
    }
  });

  it("rejects unknown topics", async () => {
    const session = await connect();
    try {
      expect(() => session.onTopic("weather" as any, () => undefined)).toThrow();
      await expect(session.subscribe("weather" as any)).rejects.toThrow();
    } finally {
      session.close();
    }
  });
});

describe("error surfacing", () => {
  it("duplicate spawn and parse errors carry server codes", async () => {
    const session = await connect();
    try {
      await session.spawnModel("dup", BOX_XML, identityPose());
      await expect(session.spawnModel("dup", BOX_XML, identityPose())).rejects.toThrow(
        "DUPLICATE_NAME",
      );
      await expect(session.spawnModel("broken", "<model", identityPose())).rejects.toThrow(
        "PARSE_ERROR",
      );
      await session.deleteModel("dup");
      await expect(session.deleteModel("dup")).rejects.toThrow("NOT_FOUND");
    } finally {
      session.close();
    }
  });

  it("two sessions operate independently", async () => {
    const one = await connect();
    const two = await connect();
    try {
      await one.spawnModel("s_a", BOX_XML, identityPose());
      await two.spawnModel("s_b", BOX_XML, identityPose());
      expect((await one.getModelStates(["s_b"]))[0]?.name).toBe("s_b");
      await one.deleteModel("s_a");
      await two.deleteModel("s_b");
    } finally {
      one.close();
      two.close();
    }
  });
});
