/** Shared selection state linking the five views. */

export const MAX_COMPARE = 3;

export type Listener = () => void;

export class SelectionStore {
  private months = new Set<string>();
  private pathId: string | null = null;
  private clusterIds: string[] = [];
  private period: number | null = null;
  private gen = 0;
  private listeners = new Set<Listener>();

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private bump(): void {
    this.gen += 1;
    for (const listener of [...this.listeners]) {
      listener();
    }
  }

  /**
   * Monotone counter bumped on every change. Async responders capture it
   * before a fetch and drop the result if the selection moved on meanwhile.
   */
  get generation(): number {
    return this.gen;
  }

  isCurrent(generation: number): boolean {
    return generation === this.gen;
  }

  lassoedMonths(): string[] {
    return [...this.months].sort();
  }

  setLasso(months: Iterable<string>): void {
    this.months = new Set(months);
    this.bump();
  }

  clearLasso(): void {
    if (this.months.size > 0) {
      this.months = new Set();
      this.bump();
    }
  }

  selectedPath(): string | null {
    return this.pathId;
  }

  selectPath(pathId: string | null): void {
    this.pathId = pathId;
    this.bump();
  }

  comparedClusters(): string[] {
    return [...this.clusterIds];
  }

  hasCluster(id: string): boolean {
    return this.clusterIds.includes(id);
  }

  /**
   * Add or remove a cluster from the comparison selection. Returns false
   * without changing anything when adding would exceed the three-cluster cap.
   */
  toggleCluster(id: string): boolean {
    const at = this.clusterIds.indexOf(id);
    if (at >= 0) {
      this.clusterIds.splice(at, 1);
      this.bump();
      return true;
    }
    if (this.clusterIds.length >= MAX_COMPARE) {
      return false;
    }
    this.clusterIds.push(id);
    this.bump();
    return true;
  }

  activePeriod(): number | null {
    return this.period;
  }

  setPeriod(period: number | null): void {
    this.period = period;
    this.bump();
  }
}
