#pragma once

#include <coroutine>
#include <exception>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <utility>

namespace ftcoll
{
    template <typename T>
    class Task;

    namespace detail
    {
        struct PromiseBase
        {
            std::coroutine_handle<> continuation = std::noop_coroutine();
            std::exception_ptr error;

            std::suspend_always initial_suspend() noexcept { return {}; }

            struct FinalAwaiter
            {
                bool await_ready() const noexcept { return false; }
                template <typename P>
                std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) noexcept
                {
                    return h.promise().continuation;
                }
                void await_resume() const noexcept {}
            };

            FinalAwaiter final_suspend() noexcept { return {}; }
            void unhandled_exception() noexcept { error = std::current_exception(); }
        };

        template <typename T>
        struct Promise : PromiseBase
        {
            std::optional<T> result;

            Task<T> get_return_object() noexcept;
            template <typename U>
            void return_value(U &&v)
            {
                result.emplace(std::forward<U>(v));
            }
            T take()
            {
                if (error)
                {
                    std::rethrow_exception(error);
                }
                return std::move(*result);
            }
        };

        template <>
        struct Promise<void> : PromiseBase
        {
            Task<void> get_return_object() noexcept;
            void return_void() noexcept {}
            void take()
            {
                if (error)
                {
                    std::rethrow_exception(error);
                }
            }
        };
    } // namespace detail

    /// Lazily started coroutine. Awaiting it runs the body and resumes the
    /// awaiter by symmetric transfer once the body finishes.
    template <typename T = void>
    class [[nodiscard]] Task
    {
    public:
        using promise_type = detail::Promise<T>;
        using Handle = std::coroutine_handle<promise_type>;

        Task() = default;
        explicit Task(Handle h) noexcept : handle_(h) {}
        Task(Task &&other) noexcept : handle_(std::exchange(other.handle_, {})) {}
        Task &operator=(Task &&other) noexcept
        {
            if (this != &other)
            {
                reset();
                handle_ = std::exchange(other.handle_, {});
            }
            return *this;
        }
        Task(const Task &) = delete;
        Task &operator=(const Task &) = delete;
        ~Task() { reset(); }

        bool valid() const noexcept { return static_cast<bool>(handle_); }
        bool done() const noexcept { return handle_ && handle_.done(); }
        Handle handle() const noexcept { return handle_; }

        auto operator co_await() && noexcept
        {
            struct Awaiter
            {
                Handle h;
                bool await_ready() const noexcept { return !h || h.done(); }
                std::coroutine_handle<> await_suspend(std::coroutine_handle<> awaiting) noexcept
                {
                    h.promise().continuation = awaiting;
                    return h;
                }
                T await_resume() { return h.promise().take(); }
            };
            return Awaiter{handle_};
        }

        /// Result of a finished task; rethrows a stored exception.
        T result()
        {
            if (!done())
            {
                throw std::logic_error("task has not completed");
            }
            return handle_.promise().take();
        }

    private:
        void reset() noexcept
        {
            if (handle_)
            {
                handle_.destroy();
                handle_ = {};
            }
        }

        Handle handle_;
    };

    namespace detail
    {
        template <typename T>
        Task<T> Promise<T>::get_return_object() noexcept
        {
            return Task<T>{std::coroutine_handle<Promise<T>>::from_promise(*this)};
        }

        inline Task<void> Promise<void>::get_return_object() noexcept
        {
            return Task<void>{std::coroutine_handle<Promise<void>>::from_promise(*this)};
        }
    } // namespace detail

    /// Drives a task whose awaits all complete inline (blocking transports).
    template <typename T>
    T run_inline(Task<T> task)
    {
        task.handle().resume();
        if (!task.done())
        {
            throw std::logic_error("task suspended under an inline driver");
        }
        return task.result();
    }
} // namespace ftcoll
