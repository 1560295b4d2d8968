import { spawn, type ChildProcess } from "node:child_process";
import path from "node:path";
import { SessionApi } from "../src/api.js";
import type { VisibilityProbe } from "../src/impressions.js";

export interface TestServer {
  baseUrl: string;
  stop: () => void;
}

/** Spawn the Python service and wait until /health answers. */
export async function startServer(port: number): Promise<TestServer> {
  // vitest is launched from frontend/, one level below the repo root
  const proc: ChildProcess = spawn(
    "python3",
    ["-m", "feedlab.cli", "serve", "--host", "127.0.0.1", "--port", String(port)],
    { cwd: path.resolve(process.cwd(), ".."), stdio: "ignore" },
  );
  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30000;
  for (;;) {
    try {
      const res = await fetch(`${baseUrl}/health`);
      if (res.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error("service did not come up");
    }
    await sleep(100);
  }
  return { baseUrl, stop: () => proc.kill() };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function waitFor(check: () => boolean, what: string, timeoutMs = 5000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!check()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(5);
  }
}

/** Scripted session clock; tests move time explicitly. */
export class ManualClock {
  t = 0;
  now = (): number => this.t;
  set(t: number): void {
    if (t < this.t) throw new Error(`clock moved backwards: ${t} < ${this.t}`);
    this.t = t;
  }
}

/** Visibility fractions by item id; stands in for real viewport geometry. */
export class FakeVisibility {
  private fractions = new Map<string, number>();

  probe: VisibilityProbe = (itemId) => this.fractions.get(itemId) ?? 0;

  set(itemId: string, fraction: number): void {
    this.fractions.set(itemId, fraction);
  }

  /** Exactly one card visible, everything else off screen. */
  setOnly(itemId: string): void {
    this.fractions.clear();
    this.fractions.set(itemId, 1);
  }

  clear(): void {
    this.fractions.clear();
  }
}

export function makeApi(baseUrl: string, clock: ManualClock): SessionApi {
  return new SessionApi(baseUrl, clock.now, (url, init) => fetch(url, init));
}
