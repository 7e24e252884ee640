import { ReviewApiClient } from './api';
import { ReviewController } from './controller';
import { render } from './view';

function config(): { baseUrl: string; reviewer: string } {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = (params.get('api') ?? '').replace(/\/$/, '');
  let reviewer = params.get('reviewer') ?? window.localStorage.getItem('reviewer') ?? '';
  while (!reviewer.trim()) {
    reviewer = window.prompt('Reviewer name (recorded with every decision):') ?? '';
  }
  window.localStorage.setItem('reviewer', reviewer);
  return { baseUrl, reviewer };
}

function start(): void {
  const { baseUrl, reviewer } = config();
  const controller = new ReviewController(new ReviewApiClient(baseUrl, reviewer));
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');
  controller.onChange(() => render(root, controller));
  document.addEventListener('keydown', (event) => {
    if (controller.handleKey(event)) event.preventDefault();
  });
  void controller.refresh();
}

start();
