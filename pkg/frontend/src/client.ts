/**
 * Episodic environment client over the planray stdio line protocol.
 *
 * Spawns the core CLI with `serve --stdio` and exchanges one JSON object per
 * line.  Requests carry strictly increasing integer ids echoed back by the
 * server; exactly one request may be outstanding at a time.
 */

import { ChildProcess, spawn } from "node:child_process";
import { createInterface, Interface } from "node:readline";

export class ProtocolError extends Error {}

export class ProcessDead extends Error {}

/** Raised when the server rejects an action id outside the action space. */
export class OutOfRangeError extends Error {}

export interface ServerError {
  code: string;
  message: string;
}

export interface SpecInfo {
  scenario: string;
  action_space: number;
  obs_dims: { layout: number[]; context: number[]; mode: string };
  n_rooms: number;
  grid: { width: number; height: number };
}

export interface Observation {
  features: number[];
  context: number[];
}

export interface StepResult {
  obs: Observation;
  reward: number;
  terminated: boolean;
  truncated: boolean;
  info: Record<string, unknown> & { accepted?: boolean; reason?: string };
}

export interface RemoteEnvOptions {
  /** Python interpreter used to launch the server (default: "python3"). */
  python?: string;
  /** Scenario name or .scenario.json path (default: server default). */
  scenario?: string;
  /** Extra arguments appended to the serve command. */
  extraArgs?: string[];
}

interface Pending {
  id: number | null; // null matches any response id (raw line probes)
  resolve: (value: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class RemoteEnv {
  private child: ChildProcess;
  private lines: Interface;
  private nextId = 1;
  private pending: Pending | null = null;
  private dead: Error | null = null;
  private specCache: SpecInfo | null = null;

  constructor(options: RemoteEnvOptions = {}) {
    const python = options.python ?? process.env.PLANRAY_PYTHON ?? "python3";
    const args = ["-m", "planray", "serve", "--stdio"];
    if (options.scenario) {
      args.push("--scenario", options.scenario);
    }
    args.push(...(options.extraArgs ?? []));
    this.child = spawn(python, args, { stdio: ["pipe", "pipe", "inherit"] });
    this.lines = createInterface({ input: this.child.stdout! });
    this.lines.on("line", (line) => this.onLine(line));
    this.child.on("exit", (code) => {
      this.dead = new ProcessDead(`server exited with code ${code}`);
      if (this.pending) {
        this.pending.reject(this.dead);
        this.pending = null;
      }
    });
    this.child.on("error", (err) => {
      this.dead = new ProcessDead(`server failed to start: ${err.message}`);
      if (this.pending) {
        this.pending.reject(this.dead);
        this.pending = null;
      }
    });
  }

  private onLine(line: string): void {
    if (!this.pending) {
      return; // unsolicited output is dropped
    }
    let parsed: Record<string, unknown>;
    try {
      parsed = JSON.parse(line) as Record<string, unknown>;
    } catch (err) {
      this.pending.reject(new ProtocolError(`unparseable response line: ${line}`));
      this.pending = null;
      return;
    }
    if (this.pending.id !== null && parsed.id !== this.pending.id) {
      this.pending.reject(
        new ProtocolError(`response id ${parsed.id} does not match request ${this.pending.id}`),
      );
      this.pending = null;
      return;
    }
    const pending = this.pending;
    this.pending = null;
    pending.resolve(parsed);
  }

  private async request(body: Record<string, unknown>): Promise<Record<string, unknown>> {
    if (this.dead) {
      throw this.dead;
    }
    if (this.pending) {
      throw new ProtocolError("a request is already outstanding");
    }
    const id = this.nextId++;
    const line = JSON.stringify({ id, ...body }) + "\n";
    const response = await new Promise<Record<string, unknown>>((resolve, reject) => {
      this.pending = { id, resolve, reject };
      this.child.stdin!.write(line, (err) => {
        if (err && this.pending?.id === id) {
          this.pending = null;
          reject(new ProcessDead(`write failed: ${err.message}`));
        }
      });
    });
    const error = response.error as ServerError | undefined;
    if (error) {
      if (error.code === "out_of_range") {
        throw new OutOfRangeError(error.message);
      }
      throw new ProtocolError(`${error.code}: ${error.message}`);
    }
    return response;
  }

  /** Action-space size and observation dimensions, cached after first call. */
  async spec(): Promise<SpecInfo> {
    if (!this.specCache) {
      this.specCache = (await this.request({ cmd: "spec" })) as unknown as SpecInfo;
    }
    return this.specCache;
  }

  async reset(seed?: number, scenario?: string): Promise<{ obs: Observation; info: Record<string, unknown> }> {
    const body: Record<string, unknown> = { cmd: "reset" };
    if (seed !== undefined) body.seed = seed;
    if (scenario !== undefined) {
      body.scenario = scenario;
      this.specCache = null;
    }
    const resp = await this.request(body);
    return {
      obs: resp.obs as unknown as Observation,
      info: resp.info as Record<string, unknown>,
    };
  }

  async step(action: number): Promise<StepResult> {
    const resp = await this.request({ cmd: "step", action });
    return {
      obs: resp.obs as unknown as Observation,
      reward: resp.reward as number,
      terminated: resp.terminated as boolean,
      truncated: resp.truncated as boolean,
      info: resp.info as StepResult["info"],
    };
  }

  async render(path: string): Promise<string> {
    const resp = await this.request({ cmd: "render", path });
    return resp.path as string;
  }

  /** Sends a raw line verbatim, resolving with the next response regardless
   *  of its id (protocol robustness probes). */
  async rawLine(text: string): Promise<Record<string, unknown>> {
    if (this.dead) {
      throw this.dead;
    }
    if (this.pending) {
      throw new ProtocolError("a request is already outstanding");
    }
    return new Promise((resolve, reject) => {
      this.pending = { id: null, resolve, reject };
      this.child.stdin!.write(text + "\n", (err) => {
        if (err && this.pending?.id === null) {
          this.pending = null;
          reject(new ProcessDead(`write failed: ${err.message}`));
        }
      });
    });
  }

  get alive(): boolean {
    return this.dead === null;
  }

  async close(): Promise<void> {
    if (this.dead) {
      return;
    }
    try {
      await this.request({ cmd: "close" });
    } catch {
      // the process may already be gone
    }
    this.child.stdin!.end();
  }

  kill(): void {
    this.child.kill("SIGKILL");
  }
}
