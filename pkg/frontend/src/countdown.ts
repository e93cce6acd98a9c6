/**
 * countdown.ts — deadline tracking for the per-task timer.
 * Anchored once to the server's time_left; the clock source is injectable
 * so tests can drive it.
 */

export class Countdown {
  private readonly deadline: number;

  constructor(
    secondsLeft: number,
    private readonly now: () => number = Date.now,
  ) {
    this.deadline = this.now() + secondsLeft * 1000;
  }

  remainingMs(): number {
    return Math.max(0, this.deadline - this.now());
  }

  expired(): boolean {
    return this.remainingMs() <= 0;
  }

  /** m:ss, rounded up so the display hits 0:00 exactly at the deadline. */
  display(): string {
    const s = Math.ceil(this.remainingMs() / 1000);
    const m = Math.floor(s / 60);
    return `${m}:${String(s % 60).padStart(2, "0")}`;
  }
}
