# Stage orchestration
