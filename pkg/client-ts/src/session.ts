/**
 * Blocking-style client session for the world-server line protocol.
 *
 * Calls return promises that resolve with the decoded response body (or
 * reject on ok:false / timeout). One request is in flight at a time; calls
 * issued concurrently queue behind each other. Topic handlers run on the
 * socket's receive path and must not block.
 */

import * as net from "node:net";

import { encode } from "./encode.js";
import type {
  LightState,
  LinkKey,
  LinkState,
  ModelState,
  Pose,
  SetStatus,
  Topic,
  TopicMessage,
  VisualKey,
  VisualState,
} from "./types.js";
import { identityPose, TOPICS } from "./types.js";

export interface SessionOptions {
  host?: string;
  port: number;
  /** Per-call timeout in milliseconds (default 5000). */
  timeoutMs?: number;
  connectTimeoutMs?: number;
}

export class RequestFailed extends Error {
  constructor(
    public readonly op: string,
    public readonly remote: string,
  ) {
    super(`${op}: ${remote}`);
  }
}

interface Pending {
  op: string;
  resolve: (body: any) => void;
  reject: (err: Error) => void;
  timer: NodeJS.Timeout;
}

export class Session {
  private socket: net.Socket;
  private buffer = "";
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private chain: Promise<unknown> = Promise.resolve();
  private handlers = new Map<Topic, Set<(msg: TopicMessage) => void>>();
  private closed = false;
  private readonly timeoutMs: number;
  /** Count of request lines written, by op (used by tests). */
  readonly requestCounts = new Map<string, number>();

  private constructor(socket: net.Socket, timeoutMs: number) {
    this.socket = socket;
    this.timeoutMs = timeoutMs;
    socket.setNoDelay(true);
    socket.on("data", (chunk) => this.onData(chunk));
    const fail = () => this.failAll(new Error("connection closed"));
    socket.on("close", fail);
    socket.on("error", fail);
  }

  static connect(options: SessionOptions): Promise<Session> {
    const host = options.host ?? "127.0.0.1";
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port: options.port });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new Error(`connect timeout to ${host}:${options.port}`));
      }, options.connectTimeoutMs ?? 5000);
      socket.once("connect", () => {
        clearTimeout(timer);
        resolve(new Session(socket, options.timeoutMs ?? 5000));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(new Error(`cannot connect to ${host}:${options.port}: ${err.message}`));
      });
    });
  }

  close(): void {
    this.closed = true;
    this.socket.destroy();
  }

  // -- receive path -----------------------------------------------------------

  private onData(chunk: Buffer): void {
    this.buffer += chunk.toString("utf-8");
    let nl;
    while ((nl = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, nl);
      this.buffer = this.buffer.slice(nl + 1);
      this.onLine(line);
    }
  }

  private onLine(line: string): void {
    let message: any;
    try {
      message = JSON.parse(line);
    } catch {
      return; // undecodable noise; drop
    }
    if (typeof message !== "object" || message === null) return;
    if ("topic" in message) {
      const handlers = this.handlers.get(message.topic as Topic);
      if (handlers) {
        for (const handler of [...handlers]) {
          try {
            handler(message as TopicMessage);
          } catch {
            // topic handlers must not break the receive loop
          }
        }
      }
      return;
    }
    const waiter = this.pending.get(message.id);
    if (waiter === undefined) {
      return; // unknown or already-completed id: discard
    }
    this.pending.delete(message.id);
    clearTimeout(waiter.timer);
    if (message.ok) {
      waiter.resolve(message.body);
    } else {
      waiter.reject(new RequestFailed(waiter.op, String(message.error ?? "unknown error")));
    }
  }

  private failAll(err: Error): void {
    for (const waiter of this.pending.values()) {
      clearTimeout(waiter.timer);
      waiter.reject(err);
    }
    this.pending.clear();
  }

  // -- request path -----------------------------------------------------------

  private issue(op: string, makeLine: (id: number) => string): Promise<any> {
    const run = () =>
      new Promise<any>((resolve, reject) => {
        if (this.closed) {
          reject(new Error("session is closed"));
          return;
        }
        const id = this.nextId++;
        const line = makeLine(id);
        const timer = setTimeout(() => {
          this.pending.delete(id);
          reject(new Error(`no response for ${op} (id ${id})`));
        }, this.timeoutMs);
        this.pending.set(id, { op, resolve, reject, timer });
        this.requestCounts.set(op, (this.requestCounts.get(op) ?? 0) + 1);
        this.socket.write(line, (err) => {
          if (err) {
            this.pending.delete(id);
            clearTimeout(timer);
            reject(err);
          }
        });
      });
    // serialize: one in-flight request per session
    const next = this.chain.then(run, run);
    this.chain = next.catch(() => undefined);
    return next;
  }

  // -- typed operations ---------------------------------------------------------

  getModelStates(names: string[]): Promise<(ModelState | null)[]> {
    return this.issue("get_model_states", (id) => encode.getModelStates(id, names)).then(
      (body) => body.results,
    );
  }

  setModelStates(states: ModelState[]): Promise<SetStatus[]> {
    return this.issue("set_model_states", (id) => encode.setModelStates(id, states)).then(
      (body) => body.statuses,
    );
  }

  getModelState(name: string): Promise<ModelState> {
    return this.issue("get_model_state", (id) => encode.getModelState(id, name)).then(
      (body) => body.state,
    );
  }

  setModelState(state: ModelState): Promise<SetStatus> {
    return this.issue("set_model_state", (id) => encode.setModelState(id, state)).then(
      (body) => body.status,
    );
  }

  getLinkStates(keys: LinkKey[]): Promise<(LinkState | null)[]> {
    return this.issue("get_link_states", (id) => encode.getLinkStates(id, keys)).then(
      (body) => body.results,
    );
  }

  setLinkStates(states: LinkState[]): Promise<SetStatus[]> {
    return this.issue("set_link_states", (id) => encode.setLinkStates(id, states)).then(
      (body) => body.statuses,
    );
  }

  getVisualStates(keys: VisualKey[]): Promise<(VisualState | null)[]> {
    return this.issue("get_visual_states", (id) => encode.getVisualStates(id, keys)).then(
      (body) => body.results,
    );
  }

  setVisualStates(states: VisualState[]): Promise<SetStatus[]> {
    return this.issue("set_visual_states", (id) => encode.setVisualStates(id, states)).then(
      (body) => body.statuses,
    );
  }

  getLightStates(names: string[]): Promise<(LightState | null)[]> {
    return this.issue("get_light_states", (id) => encode.getLightStates(id, names)).then(
      (body) => body.results,
    );
  }

  setLightStates(states: LightState[]): Promise<SetStatus[]> {
    return this.issue("set_light_states", (id) => encode.setLightStates(id, states)).then(
      (body) => body.statuses,
    );
  }

  spawnModel(name: string, xml: string, initialPose?: Pose): Promise<void> {
    return this.issue("spawn_model", (id) =>
      encode.spawnModel(id, name, xml, initialPose ?? identityPose()),
    ).then(() => undefined);
  }

  deleteModel(name: string): Promise<void> {
    return this.issue("delete_model", (id) => encode.deleteModel(id, name)).then(() => undefined);
  }

  advanceClock(ticks: number): Promise<number> {
    return this.issue("advance_clock", (id) => encode.advanceClock(id, ticks)).then(
      (body) => body.sim_time_ns,
    );
  }

  // -- topics ---------------------------------------------------------------------

  /** Replace this session's server-side subscription set. */
  subscribe(...topics: Topic[]): Promise<string[]> {
    for (const topic of topics) {
      if (!TOPICS.includes(topic)) {
        return Promise.reject(new Error(`unknown topic ${topic}`));
      }
    }
    return this.issue("subscribe", (id) => encode.subscribe(id, topics)).then(
      (body) => body.topics,
    );
  }

  /** Register a local handler; delivery also requires a server subscription. */
  onTopic(topic: Topic, handler: (msg: TopicMessage) => void): () => void {
    if (!TOPICS.includes(topic)) {
      throw new Error(`unknown topic ${topic}`);
    }
    let handlers = this.handlers.get(topic);
    if (!handlers) {
      handlers = new Set();
      this.handlers.set(topic, handlers);
    }
    handlers.add(handler);
    return () => handlers!.delete(handler);
  }
}
