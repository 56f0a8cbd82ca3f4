/** Fixed-capacity ring buffer backing the force strip chart. */

export class RingBuffer<T> {
  private items: T[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity <= 0) throw new Error('capacity must be positive');
    this.items = new Array<T>(capacity);
  }

  push(item: T): void {
    this.items[(this.head + this.count) % this.capacity] = item;
    if (this.count < this.capacity) {
      this.count += 1;
    } else {
      this.head = (this.head + 1) % this.capacity; // overwrite the oldest
    }
  }

  get length(): number {
    return this.count;
  }

  /** Oldest to newest. */
  toArray(): T[] {
    const out: T[] = [];
    for (let i = 0; i < this.count; i += 1) {
      out.push(this.items[(this.head + i) % this.capacity]);
    }
    return out;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }
}
