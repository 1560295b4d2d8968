import { describe, expect, it } from "vitest";
import { ImpressionTracker } from "../src/impressions.js";
import { FakeVisibility, ManualClock } from "./helpers.js";

type Emitted = { itemId: string; action: "enter" | "exit"; tMs: number };

function setup() {
  const clock = new ManualClock();
  const vis = new FakeVisibility();
  const emitted: Emitted[] = [];
  const tracker = new ImpressionTracker(vis.probe, clock.now, (itemId, action, tMs) => {
    emitted.push({ itemId, action, tMs });
  });
  tracker.setItems(["a", "b", "c"]);
  return { clock, vis, emitted, tracker };
}

describe("impression debounce", () => {
  it("requires sustained majority visibility before entering", () => {
    const { clock, vis, emitted, tracker } = setup();
    vis.set("a", 0.9);
    clock.set(1000);
    tracker.evaluate();
    expect(emitted).toEqual([]);
    clock.set(1099);
    tracker.evaluate();
    expect(emitted).toEqual([]);
    clock.set(1100);
    tracker.evaluate();
    expect(emitted).toEqual([{ itemId: "a", action: "enter", tMs: 1100 }]);
    // steady visibility does not re-enter
    clock.set(2000);
    tracker.evaluate();
    expect(emitted).toHaveLength(1);
  });

  it("ignores scroll-through flashes shorter than the debounce", () => {
    const { clock, vis, emitted, tracker } = setup();
    vis.set("b", 1);
    clock.set(500);
    tracker.evaluate();
    vis.set("b", 0.2);
    clock.set(560);
    tracker.evaluate();
    vis.set("b", 1);
    clock.set(600);
    tracker.evaluate();
    expect(emitted).toEqual([]);
    // the clock restarts from the re-appearance
    clock.set(699);
    tracker.evaluate();
    expect(emitted).toEqual([]);
    clock.set(700);
    tracker.evaluate();
    expect(emitted).toEqual([{ itemId: "b", action: "enter", tMs: 700 }]);
  });

  it("treats less-than-half visible as off screen", () => {
    const { clock, vis, emitted, tracker } = setup();
    vis.set("a", 0.49);
    clock.set(100);
    tracker.evaluate();
    clock.set(300);
    tracker.evaluate();
    expect(emitted).toEqual([]);
    vis.set("a", 0.5);
    clock.set(400);
    tracker.evaluate();
    clock.set(500);
    tracker.evaluate();
    expect(emitted).toEqual([{ itemId: "a", action: "enter", tMs: 500 }]);
  });

  it("exits when the card leaves and when items are replaced", () => {
    const { clock, vis, emitted, tracker } = setup();
    vis.set("a", 1);
    clock.set(0);
    tracker.evaluate();
    clock.set(100);
    tracker.evaluate();
    vis.set("a", 0);
    clock.set(900);
    tracker.evaluate();
    expect(emitted).toEqual([
      { itemId: "a", action: "enter", tMs: 100 },
      { itemId: "a", action: "exit", tMs: 900 },
    ]);

    vis.set("b", 1);
    clock.set(1000);
    tracker.evaluate();
    clock.set(1100);
    tracker.evaluate();
    clock.set(1500);
    tracker.setItems(["c", "d"]);
    expect(emitted.slice(2)).toEqual([
      { itemId: "b", action: "enter", tMs: 1100 },
      { itemId: "b", action: "exit", tMs: 1500 },
    ]);
  });

  it("flush closes open impressions", () => {
    const { clock, vis, emitted, tracker } = setup();
    vis.set("c", 0.8);
    clock.set(0);
    tracker.evaluate();
    clock.set(150);
    tracker.evaluate();
    clock.set(800);
    tracker.flush();
    expect(emitted).toEqual([
      { itemId: "c", action: "enter", tMs: 150 },
      { itemId: "c", action: "exit", tMs: 800 },
    ]);
    tracker.flush();
    expect(emitted).toHaveLength(2);
  });
});
