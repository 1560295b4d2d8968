import { describe, expect, it } from "vitest";
import { SessionApi } from "../src/api.js";
import { ManualClock } from "./helpers.js";

interface Sent {
  url: string;
  body: Record<string, unknown>;
}

/** fetch stand-in: fails with a network error while down, records while up. */
function fakeNetwork() {
  const sent: Sent[] = [];
  let down = false;
  const fetchFn = async (url: string, init?: RequestInit) => {
    if (down) throw new TypeError("fetch failed");
    sent.push({ url, body: init?.body ? JSON.parse(String(init.body)) : {} });
    return new Response(JSON.stringify({ ok: true }), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  };
  return {
    sent,
    fetchFn,
    setDown(value: boolean) {
      down = value;
    },
  };
}

describe("offline report queue", () => {
  it("queues reports while unreachable and flushes them in order", async () => {
    const net = fakeNetwork();
    const clock = new ManualClock();
    const api = new SessionApi("http://test", clock.now, net.fetchFn);
    const offlineStates: boolean[] = [];
    api.onOfflineChange = (offline) => offlineStates.push(offline);

    net.setDown(true);
    clock.set(100);
    await api.reportImpression("s1", "item-1", "enter");
    clock.set(600);
    await api.reportImpression("s1", "item-1", "exit");
    clock.set(700);
    await api.reportScroll("s1", 240);

    expect(api.offline).toBe(true);
    expect(api.queuedReports()).toBe(3);
    expect(net.sent).toHaveLength(0);

    net.setDown(false);
    expect(await api.flushReports()).toBe(true);
    expect(api.offline).toBe(false);
    expect(api.queuedReports()).toBe(0);
    expect(net.sent.map((s) => s.body.t_ms)).toEqual([100, 600, 700]);
    expect(net.sent.map((s) => s.url.split("/").pop())).toEqual([
      "impressions",
      "impressions",
      "scroll",
    ]);
    expect(offlineStates).toEqual([true, false]);
  });

  it("keeps timestamps captured at interaction time, not send time", async () => {
    const net = fakeNetwork();
    const clock = new ManualClock();
    const api = new SessionApi("http://test", clock.now, net.fetchFn);

    net.setDown(true);
    clock.set(250);
    await api.reportScroll("s1", 100);
    clock.set(9000);
    net.setDown(false);
    await api.flushReports();
    expect(net.sent[0].body).toEqual({ position_px: 100, t_ms: 250 });
  });

  it("drops a report the server rejects instead of wedging the queue", async () => {
    const sent: Sent[] = [];
    let rejectNext = true;
    const fetchFn = async (url: string, init?: RequestInit) => {
      const body = init?.body ? JSON.parse(String(init.body)) : {};
      if (rejectNext) {
        rejectNext = false;
        return new Response(
          JSON.stringify({ error: { code: "validation", message: "bad" } }),
          { status: 400, headers: { "content-type": "application/json" } },
        );
      }
      sent.push({ url, body });
      return new Response(JSON.stringify({ ok: true }), {
        status: 200,
        headers: { "content-type": "application/json" },
      });
    };
    const clock = new ManualClock();
    const api = new SessionApi("http://test", clock.now, fetchFn);
    clock.set(10);
    await api.reportScroll("s1", 1);
    clock.set(20);
    await api.reportScroll("s1", 2);
    expect(api.queuedReports()).toBe(0);
    expect(api.offline).toBe(false);
    expect(sent.map((s) => s.body.t_ms)).toEqual([20]);
  });

  it("serializes mutations behind queued reports", async () => {
    const order: string[] = [];
    let down = true;
    const fetchFn = async (url: string, _init?: RequestInit) => {
      if (down && url.endsWith("/impressions")) throw new TypeError("fetch failed");
      order.push(url.split("/").pop() ?? "");
      const payload = url.endsWith("/option")
        ? { turn: {}, confirmation: null, dialogue: {} }
        : { ok: true };
      return new Response(JSON.stringify(payload), {
        status: 200,
        headers: { "content-type": "application/json" },
      });
    };
    const clock = new ManualClock();
    const api = new SessionApi("http://test", clock.now, fetchFn);
    clock.set(5);
    await api.reportImpression("s1", "x", "enter");
    expect(api.queuedReports()).toBe(1);
    down = false;
    clock.set(50);
    await api.selectOption("s1", "opt-1");
    expect(order).toEqual(["impressions", "option"]);
  });
});
