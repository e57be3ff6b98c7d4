/**
 * Session connection: latest-wins snapshot buffer and control sending.
 *
 * Rendering reads `latest` whenever it likes; intermediate snapshots are
 * deliberately droppable. While disconnected, exactly one outgoing control
 * is queued and newer ones replace it, so a reconnect never replays a
 * stale slider history.
 */

import type { Ack, ControlMessage, ErrorMessage, ServerMessage, Snapshot } from "./types.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionHandlers {
  onSnapshot?: (snapshot: Snapshot) => void;
  onAck?: (ack: Ack) => void;
  onError?: (error: ErrorMessage) => void;
  onConnected?: (connected: boolean) => void;
}

export class SessionClient {
  latest: Snapshot | null = null;
  connected = false;

  private socket: SocketLike | null = null;
  private pending: ControlMessage | null = null;
  private stopped = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly handlers: SessionHandlers = {},
    private readonly reconnectDelayMs = 1_000,
  ) {}

  connect(): void {
    if (this.stopped) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.connected = true;
      this.handlers.onConnected?.(true);
      if (this.pending !== null) {
        socket.send(JSON.stringify(this.pending));
        this.pending = null;
      }
    };
    socket.onmessage = (event) => this.receive(event.data);
    socket.onclose = () => {
      this.connected = false;
      this.socket = null;
      this.handlers.onConnected?.(false);
      if (!this.stopped) {
        this.reconnectTimer = setTimeout(() => this.connect(), this.reconnectDelayMs);
      }
    };
  }

  /** Send now if connected, otherwise hold this one message for the reopen. */
  send(control: ControlMessage): void {
    if (this.connected && this.socket !== null) {
      this.socket.send(JSON.stringify(control));
    } else {
      this.pending = control;
    }
  }

  close(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
    this.socket = null;
    this.connected = false;
  }

  private receive(data: string): void {
    let message: ServerMessage;
    try {
      message = JSON.parse(data) as ServerMessage;
    } catch {
      return; // not ours to interpret
    }
    if (message.type === "snapshot") {
      this.latest = message;
      this.handlers.onSnapshot?.(message);
    } else if (message.type === "ack") {
      this.handlers.onAck?.(message);
    } else if (message.type === "error") {
      this.handlers.onError?.(message);
    }
  }
}
